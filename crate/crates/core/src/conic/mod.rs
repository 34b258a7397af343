//! Standard-form conic programs.
//!
//! A [`ConicProgram`] maximizes a linear objective `cᵀx` subject to linear
//! equalities `Ax = b`, with the variable vector partitioned into consecutive
//! cone blocks (free, nonnegative orthant, second-order cone). Everything the
//! arbitrage models need is expressed in this form: bounds become slack
//! variables, and each robust or chance constraint becomes one second-order
//! cone block whose first coordinate is the scalar bound.
//!
//! [`solve`] hands the program to an interior-point backend and
//! [`validate`] re-checks the answer using nothing but the program data.

mod solver;
mod validate;

use std::io::{self, Write};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use solver::{solve, DEFAULT_TOL};
pub use validate::{validate, ResidualReport};

/// One block of the variable partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeBlock {
    Free(usize),
    NonNegative(usize),
    /// `(t, w) ∈ ℝ × ℝⁿ⁻¹` with `‖w‖ ≤ t`.
    SecondOrder(usize),
}

impl ConeBlock {
    pub fn len(&self) -> usize {
        match *self {
            ConeBlock::Free(n) | ConeBlock::NonNegative(n) | ConeBlock::SecondOrder(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Contiguous run of variable indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRange {
    pub start: usize,
    pub len: usize,
}

impl VarRange {
    pub fn at(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        self.start + i
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    pub fn slice<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.range()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    objective: DVector<f64>,
    equalities: DMatrix<f64>,
    rhs: DVector<f64>,
    cones: Vec<ConeBlock>,
    names: Vec<String>,
}

impl ConicProgram {
    pub fn new(
        objective: DVector<f64>,
        equalities: DMatrix<f64>,
        rhs: DVector<f64>,
        cones: Vec<ConeBlock>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = objective.len();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if equalities.ncols() != n {
            return bad(format!("equality matrix has {} columns, expected {n}", equalities.ncols()));
        }
        if equalities.nrows() != rhs.len() {
            return bad(format!(
                "equality matrix has {} rows but rhs has {}",
                equalities.nrows(),
                rhs.len()
            ));
        }
        let covered: usize = cones.iter().map(ConeBlock::len).sum();
        if covered != n {
            return bad(format!("cone blocks cover {covered} variables, expected {n}"));
        }
        if let Some(c) = cones.iter().find(|c| matches!(c, ConeBlock::SecondOrder(k) if *k < 2)) {
            return bad(format!("second-order block {c:?} needs dimension >= 2"));
        }
        if names.len() != n {
            return bad(format!("{} variable names for {n} variables", names.len()));
        }
        Ok(Self { objective, equalities, rhs, cones, names })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn equalities(&self) -> &DMatrix<f64> {
        &self.equalities
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn cones(&self) -> &[ConeBlock] {
        &self.cones
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index ranges of the cone blocks, in order.
    pub fn block_ranges(&self) -> impl Iterator<Item = (ConeBlock, Range<usize>)> + '_ {
        self.cones.iter().scan(0usize, |offset, &block| {
            let start = *offset;
            *offset += block.len();
            Some((block, start..*offset))
        })
    }

    /// Plain-text dump for offline inspection.
    ///
    /// Sections are `objective`, `cones`, `equalities` (one row per line,
    /// coefficients then `| rhs`) and `names`.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# conic program: {} vars, {} equalities", self.num_vars(), self.num_equalities())?;
        writeln!(w, "objective maximize")?;
        writeln!(w, "{}", join(self.objective.iter()))?;
        writeln!(w, "cones")?;
        for (block, range) in self.block_ranges() {
            let kind = match block {
                ConeBlock::Free(_) => "free",
                ConeBlock::NonNegative(_) => "nonneg",
                ConeBlock::SecondOrder(_) => "soc",
            };
            writeln!(w, "{kind} {} {}", range.start, range.end)?;
        }
        writeln!(w, "equalities")?;
        for (row, rhs) in self.equalities.row_iter().zip(self.rhs.iter()) {
            writeln!(w, "{} | {rhs:e}", join(row.iter()))?;
        }
        writeln!(w, "names")?;
        for name in &self.names {
            writeln!(w, "{name}")?;
        }
        Ok(())
    }
}

fn join<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

/// Incremental construction of a [`ConicProgram`] from sparse rows.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    cones: Vec<ConeBlock>,
    names: Vec<String>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
    objective: Vec<(usize, f64)>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    fn block(&mut self, name: &str, block: ConeBlock) -> VarRange {
        let start = self.names.len();
        let n = block.len();
        if n == 1 {
            self.names.push(name.to_string());
        } else {
            self.names.extend((0..n).map(|i| format!("{name}[{i}]")));
        }
        // Adjacent blocks of the same kind merge; SOC blocks never do.
        match (self.cones.last_mut(), block) {
            (Some(ConeBlock::Free(k)), ConeBlock::Free(n)) => *k += n,
            (Some(ConeBlock::NonNegative(k)), ConeBlock::NonNegative(n)) => *k += n,
            _ => self.cones.push(block),
        }
        VarRange { start, len: n }
    }

    pub fn free(&mut self, name: &str, n: usize) -> VarRange {
        self.block(name, ConeBlock::Free(n))
    }

    pub fn nonnegative(&mut self, name: &str, n: usize) -> VarRange {
        self.block(name, ConeBlock::NonNegative(n))
    }

    pub fn second_order(&mut self, name: &str, n: usize) -> VarRange {
        assert!(n >= 2, "second-order cone needs dimension >= 2");
        self.block(name, ConeBlock::SecondOrder(n))
    }

    /// Adds `Σ coef·x[idx] = rhs`. Repeated indices accumulate.
    pub fn equality(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        self.rows.push((terms.into_iter().collect(), rhs));
    }

    pub fn maximize(&mut self, var: usize, coef: f64) {
        self.objective.push((var, coef));
    }

    pub fn num_equalities(&self) -> usize {
        self.rows.len()
    }

    pub fn build(self) -> ConicProgram {
        let n = self.names.len();
        let mut objective = DVector::zeros(n);
        for (i, c) in self.objective {
            objective[i] += c;
        }
        let mut a = DMatrix::zeros(self.rows.len(), n);
        let mut rhs = DVector::zeros(self.rows.len());
        for (r, (terms, b)) in self.rows.into_iter().enumerate() {
            for (j, c) in terms {
                a[(r, j)] += c;
            }
            rhs[r] = b;
        }
        ConicProgram::new(objective, a, rhs, self.cones, self.names)
            .expect("builder keeps dimensions consistent")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Present iff `status == Optimal`.
    pub primal: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub iterations: u32,
    pub detail: Option<String>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Primal vector and objective, or a solver error carrying the status.
    pub fn into_optimal(self) -> Result<(Vec<f64>, f64)> {
        match (self.status, self.primal, self.objective_value) {
            (SolveStatus::Optimal, Some(x), Some(obj)) => Ok((x, obj)),
            (status, _, _) => Err(Error::Solver { status, detail: self.detail }),
        }
    }
}
