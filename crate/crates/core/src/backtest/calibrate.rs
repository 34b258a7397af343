//! Mapping the normalized budget `Γ ∈ [0, 1]` onto each strategy's own parameter.
//!
//! Robust strategies scale linearly up to `r_max`, the smallest raw budget at
//! which the guaranteed profit reaches zero. Chance strategies use the fixed
//! confidence map `0.5 + 0.499·Γ`.

use serde::{Deserialize, Serialize};

use super::{ModelSet, StrategyId};
use crate::error::{Error, Result};
use crate::storage::StorageSpec;

/// Guarantees at or below this are treated as zero when deciding degeneracy.
pub const DEGENERATE_TOL: f64 = 1e-6;
/// Largest raw budget tried while bracketing `r_max`.
pub const BUDGET_CAP: f64 = (1u64 << 20) as f64;

const CONF_BASE: f64 = 0.5;
const CONF_SLOPE: f64 = 0.499;
const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetMap {
    /// `r = Γ·r_max`.
    Raw { r_max: f64 },
    /// `conf = base + slope·Γ`.
    Confidence { base: f64, slope: f64 },
}

impl BudgetMap {
    pub fn confidence() -> Self {
        BudgetMap::Confidence { base: CONF_BASE, slope: CONF_SLOPE }
    }

    pub fn parameter(&self, gamma: f64) -> f64 {
        match *self {
            BudgetMap::Raw { r_max } => gamma * r_max,
            BudgetMap::Confidence { base, slope } => base + slope * gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub strategy: StrategyId,
    pub map: BudgetMap,
    /// Guaranteed profit at zero budget (robust strategies only).
    pub nominal_worst_case: Option<f64>,
    /// Zero-budget guarantee was not positive, so `r_max` was set to 0.
    pub degenerate: bool,
    /// Bracketing reached [`BUDGET_CAP`] with profit still guaranteed.
    pub capped: bool,
}

impl Calibration {
    pub fn r_max(&self) -> Option<f64> {
        match self.map {
            BudgetMap::Raw { r_max } => Some(r_max),
            BudgetMap::Confidence { .. } => None,
        }
    }

    pub fn parameter(&self, gamma: f64) -> f64 {
        self.map.parameter(gamma)
    }
}

pub fn calibrate_budget(strategy: StrategyId, models: &ModelSet, spec: &StorageSpec, tol: f64) -> Result<Calibration> {
    if !strategy.is_robust() {
        return Ok(Calibration {
            strategy,
            map: BudgetMap::confidence(),
            nominal_worst_case: None,
            degenerate: false,
            capped: false,
        });
    }
    let guarantee = |r: f64| {
        models
            .solve(strategy, r, spec, tol)
            .map(|s| s.worst_case)
            .map_err(|e| Error::Cell { strategy, gamma: r, source: Box::new(e) })
    };
    let fixed_max = (strategy == StrategyId::PolyQuantile).then_some(1.0);
    let found = find_r_max(guarantee, fixed_max)?;
    Ok(Calibration {
        strategy,
        map: BudgetMap::Raw { r_max: found.r_max },
        nominal_worst_case: Some(found.at_zero),
        degenerate: found.degenerate,
        capped: found.capped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RMax {
    pub r_max: f64,
    pub at_zero: f64,
    pub degenerate: bool,
    pub capped: bool,
}

/// Smallest `r` with `guarantee(r) ≈ 0`, for a non-increasing, nonnegative `guarantee`.
///
/// The upper bracket doubles from 1 until the guarantee vanishes, then
/// bisection narrows `[lo, hi]` to a relative width of `1e−9`; `hi` is
/// returned, so the guarantee at `r_max` is zero up to solver accuracy.
pub(crate) fn find_r_max(mut guarantee: impl FnMut(f64) -> Result<f64>, fixed_max: Option<f64>) -> Result<RMax> {
    let at_zero = guarantee(0.0)?;
    let degenerate = at_zero <= DEGENERATE_TOL;
    if let Some(r_max) = fixed_max {
        return Ok(RMax { r_max: if degenerate { 0.0 } else { r_max }, at_zero, degenerate, capped: false });
    }
    if degenerate {
        return Ok(RMax { r_max: 0.0, at_zero, degenerate, capped: false });
    }
    let zero = DEGENERATE_TOL * (1.0 + at_zero);
    let (mut lo, mut hi) = (0.0, 1.0);
    while guarantee(hi)? > zero {
        if hi >= BUDGET_CAP {
            return Ok(RMax { r_max: hi, at_zero, degenerate, capped: true });
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if guarantee(mid)? > zero {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RMax { r_max: hi, at_zero, degenerate, capped: false })
}
