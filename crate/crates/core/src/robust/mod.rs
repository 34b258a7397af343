//! Robust and chance-constrained counterparts of the arbitrage LP.
//!
//! Every formulation is the same shape: schedule variables from the
//! [`FeasibleSet`], a free scalar `γ` that is maximized, and a handful of
//! extra variables tying `γ` to the price model.
//!
//! * polyhedral `{λ : Dλ ≤ d}`: dual variables `y ≥ 0` with
//!   `γ = −dᵀy` and `Dᵀy = −(p − b)`;
//! * ellipsoidal `{λ̄ + Qu : ‖u‖ ≤ 1}`: one second-order cone
//!   `(λ̄ᵀx − γ, Qᵀx)` with `x = p − b`;
//! * chance-normal: the ellipsoidal program with `λ̄ = μ`, `Q = Φ⁻¹(conf)·diag(σ)`.
//!
//! Sets that collapse to a single point (zero-width boxes, zero shapes) are
//! built as the nominal LP directly, so equal centers give the same program.

mod lognormal;
mod worst_case;

use nalgebra::DMatrix;

use crate::conic::{self, ConicProgram, ProgramBuilder, ResidualReport, SolveStatus, VarRange};
use crate::error::{Error, Result};
use crate::normal;
use crate::storage::{build_feasible_set, FeasibleSet, Schedule, ScheduleVars, StorageSpec};
use crate::uncertainty::{EllipsoidalSet, NormalModel, PolyhedralSet, UncertaintyModel};

pub use lognormal::{solve_chance_lognormal, LogNormalOutcome, KAPPA_TOL, LOGNORMAL_MAX_ITER};
pub use worst_case::{inner_worst_case, WorstCase};

/// Highest confidence accepted by the chance formulations.
pub const MAX_CONFIDENCE: f64 = 0.999;

/// A built program plus the indices needed to read a schedule back out of it.
#[derive(Debug, Clone)]
pub struct ArbitrageProgram {
    program: ConicProgram,
    vars: ScheduleVars,
    gamma: usize,
    duals: Option<VarRange>,
}

#[derive(Debug, Clone)]
pub struct RobustSolution {
    pub schedule: Schedule,
    /// Optimal `γ`: the guaranteed (worst-case or chance-level) profit.
    pub worst_case: f64,
    /// Polyhedral dual variables `y`, one per row of `D`.
    pub duals: Option<Vec<f64>>,
    pub residuals: ResidualReport,
}

impl ArbitrageProgram {
    fn start(fs: &FeasibleSet) -> (ProgramBuilder, ScheduleVars, usize) {
        let mut b = ProgramBuilder::new();
        let vars = fs.install(&mut b);
        let gamma = b.free("gamma", 1).at(0);
        b.maximize(gamma, 1.0);
        (b, vars, gamma)
    }

    /// Deterministic LP at fixed `prices`, written as `max γ` with `γ = λᵀ(p − b)`.
    pub fn nominal(fs: &FeasibleSet, prices: &[f64]) -> Result<Self> {
        check_len(fs, prices.len())?;
        let (mut b, vars, gamma) = Self::start(fs);
        let mut row = vec![(gamma, 1.0)];
        for (t, &l) in prices.iter().enumerate() {
            row.extend(vars.net_terms(t, -l));
        }
        b.equality(row, 0.0);
        Ok(Self { program: b.build(), vars, gamma, duals: None })
    }

    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn schedule_vars(&self) -> ScheduleVars {
        self.vars
    }

    pub fn solve(&self, tol: f64) -> Result<RobustSolution> {
        let sol = conic::solve(&self.program, tol);
        let residuals = conic::validate(&self.program, &sol, tol);
        let (x, _) = sol.into_optimal()?;
        if residuals.flagged {
            return Err(Error::Solver {
                status: SolveStatus::NumericalFailure,
                detail: Some(format!("solution failed residual check: {residuals:?}")),
            });
        }
        Ok(RobustSolution {
            schedule: self.vars.extract(&x),
            worst_case: x[self.gamma],
            duals: self.duals.map(|d| d.slice(&x).to_vec()),
            residuals,
        })
    }
}

fn check_len(fs: &FeasibleSet, got: usize) -> Result<()> {
    if got != fs.horizon() {
        return Err(Error::LengthMismatch { expected: fs.horizon(), got });
    }
    Ok(())
}

/// Feasible set whose negative-price rule uses the model's nominal prices.
pub fn feasible_set_for(spec: &StorageSpec, model: &UncertaintyModel) -> Result<FeasibleSet> {
    build_feasible_set(spec, &model.center())
}

/// `max γ` s.t. `γ = −dᵀy`, `Dᵀy = −(p − b)`, `y ≥ 0`.
pub fn reformulate_polyhedral(fs: &FeasibleSet, set: &PolyhedralSet) -> Result<ArbitrageProgram> {
    check_len(fs, set.horizon())?;
    if let Some((lo, hi)) = set.box_bounds() {
        if lo == hi {
            return ArbitrageProgram::nominal(fs, &lo);
        }
    }
    let (mut b, vars, gamma) = ArbitrageProgram::start(fs);
    let d = &set.constraint_matrix;
    let y = b.nonnegative("y", set.num_rows());
    let mut row = vec![(gamma, 1.0)];
    row.extend(set.constraint_rhs.iter().enumerate().map(|(i, &di)| (y.at(i), di)));
    b.equality(row, 0.0);
    for t in 0..fs.horizon() {
        let mut row: Vec<(usize, f64)> = (0..set.num_rows())
            .filter(|&i| d[(i, t)] != 0.0)
            .map(|i| (y.at(i), d[(i, t)]))
            .collect();
        row.extend(vars.net_terms(t, 1.0));
        b.equality(row, 0.0);
    }
    Ok(ArbitrageProgram { program: b.build(), vars, gamma, duals: Some(y) })
}

/// `max γ` s.t. `λ̄ᵀx − ‖Qᵀx‖ ≥ γ` as one second-order cone.
pub fn reformulate_ellipsoidal(fs: &FeasibleSet, set: &EllipsoidalSet) -> Result<ArbitrageProgram> {
    check_len(fs, set.horizon())?;
    soc_program(fs, &set.center, &set.shape)
}

fn soc_program(fs: &FeasibleSet, center: &[f64], shape: &DMatrix<f64>) -> Result<ArbitrageProgram> {
    if shape.iter().all(|&q| q == 0.0) {
        return ArbitrageProgram::nominal(fs, center);
    }
    let t_len = fs.horizon();
    let (mut b, vars, gamma) = ArbitrageProgram::start(fs);
    let cone = b.second_order("soc", t_len + 1);
    // s₀ = λ̄ᵀx − γ
    let mut row = vec![(cone.at(0), 1.0), (gamma, 1.0)];
    for (t, &c) in center.iter().enumerate() {
        row.extend(vars.net_terms(t, -c));
    }
    b.equality(row, 0.0);
    // w_j = Σ_t Q_tj x_t
    for j in 0..t_len {
        let mut row = vec![(cone.at(j + 1), 1.0)];
        for t in 0..t_len {
            let q = shape[(t, j)];
            if q != 0.0 {
                row.extend(vars.net_terms(t, -q));
            }
        }
        b.equality(row, 0.0);
    }
    Ok(ArbitrageProgram { program: b.build(), vars, gamma, duals: None })
}

pub(crate) fn check_confidence(conf: f64) -> Result<()> {
    if !(0.5..=MAX_CONFIDENCE).contains(&conf) {
        return Err(Error::InvalidParameter(format!(
            "confidence {conf} outside [0.5, {MAX_CONFIDENCE}]"
        )));
    }
    Ok(())
}

/// The ellipsoid `(μ, Φ⁻¹(conf)·diag(σ))` that the chance-normal constraint reduces to.
pub fn chance_normal_ellipsoid(model: &NormalModel, conf: f64) -> Result<EllipsoidalSet> {
    check_confidence(conf)?;
    let z = normal::quantile(conf);
    let diag = nalgebra::DVector::from_iterator(model.horizon(), model.std.iter().map(|s| z * s));
    Ok(EllipsoidalSet { center: model.mean.clone(), shape: DMatrix::from_diagonal(&diag) })
}

/// `max γ` s.t. `μᵀx − Φ⁻¹(conf)·‖diag(σ)x‖ ≥ γ`.
pub fn reformulate_chance_normal(fs: &FeasibleSet, model: &NormalModel, conf: f64) -> Result<ArbitrageProgram> {
    reformulate_ellipsoidal(fs, &chance_normal_ellipsoid(model, conf)?)
}
