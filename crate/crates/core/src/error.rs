use std::fmt;

use thiserror::Error;

use crate::backtest::StrategyId;
use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a CSV data row was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowProblem {
    FieldCount(usize),
    Timestamp(String),
    NotOnTheHour(String),
    NonNumericPrice(String),
    NonFinitePrice(String),
}

impl fmt::Display for RowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowProblem::FieldCount(n) => write!(f, "expected 2 fields, found {n}"),
            RowProblem::Timestamp(s) => write!(f, "unparseable timestamp {s:?}"),
            RowProblem::NotOnTheHour(s) => write!(f, "timestamp {s:?} is not on the hour"),
            RowProblem::NonNumericPrice(s) => write!(f, "non-numeric price {s:?}"),
            RowProblem::NonFinitePrice(s) => write!(f, "non-finite price {s:?}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row {row}: {problem}")]
    MalformedRow { row: usize, problem: RowProblem },

    #[error("row {row}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { row: usize, timestamp: String },

    #[error("bad header: expected `timestamp,price`, found `{0}`")]
    BadHeader(String),

    #[error("training set is empty")]
    EmptyTrainSet,

    #[error("years {0:?} appear in both the training and test sets")]
    OverlappingYears(Vec<i32>),

    #[error("need at least {needed} days, got {got}")]
    TooFewDays { needed: usize, got: usize },

    #[error("invalid storage spec: {0}")]
    InvalidSpec(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matched lognormal undefined: mean of the weighted sum is {0} (not positive)")]
    NonPositiveMean(f64),

    #[error("ellipsoid fit did not converge after {iterations} iterations (violation {violation:e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("solver returned {status:?}{}", detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    Solver { status: SolveStatus, detail: Option<String> },

    #[error("{0} is not an uncertainty set")]
    NotASet(&'static str),

    #[error("{strategy} at gamma={gamma}")]
    Cell {
        strategy: StrategyId,
        gamma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure came out of the conic solver, possibly wrapped in cell context.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Solver { .. } => true,
            Error::Cell { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
