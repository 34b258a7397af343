//! Out-of-sample evaluation of the six strategies across a budget grid.
//!
//! Each (strategy, Γ) cell is solved once on the training models and the
//! resulting static schedule is replayed against every test day.

mod calibrate;
mod models;
mod report;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::PriceDay;
use crate::storage::{realized_profit, StorageSpec};
use crate::uncertainty::UncertaintyModel;

pub use calibrate::{calibrate_budget, BudgetMap, Calibration, BUDGET_CAP, DEGENERATE_TOL};
pub use models::{CellSolution, FittedModel, ModelRecord, ModelSet};
pub use report::{BacktestReport, DatasetInfo, ModelBundle, StrategyFrontier, BUNDLE_FORMAT_VERSION};

/// Realized profit below this counts as a loss day.
pub const LOSS_THRESHOLD: f64 = -1e-6;
pub const DAYS_PER_YEAR: f64 = 365.0;
pub const DEFAULT_GAMMA_GRID: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyId {
    PolyQuantile,
    PolyMeanStd,
    EllipMinVol,
    EllipCov,
    ChanceNormal,
    ChanceLogNormal,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::PolyQuantile,
        StrategyId::PolyMeanStd,
        StrategyId::EllipMinVol,
        StrategyId::EllipCov,
        StrategyId::ChanceNormal,
        StrategyId::ChanceLogNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::PolyQuantile => "PolyQuantile",
            StrategyId::PolyMeanStd => "PolyMeanStd",
            StrategyId::EllipMinVol => "EllipMinVol",
            StrategyId::EllipCov => "EllipCov",
            StrategyId::ChanceNormal => "ChanceNormal",
            StrategyId::ChanceLogNormal => "ChanceLogNormal",
        }
    }

    /// Uncertainty-set strategies (the other two are chance constraints).
    pub fn is_robust(self) -> bool {
        !matches!(self, StrategyId::ChanceNormal | StrategyId::ChanceLogNormal)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are ignored, so `poly-quantile` works.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name().to_lowercase() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    /// Normalized budget Γ.
    pub gamma: f64,
    /// Raw budget or confidence level Γ mapped to.
    pub parameter: f64,
    pub worst_case: f64,
    /// Mean realized profit per test day.
    pub expected_profit: f64,
    pub risk_days_per_year: f64,
    pub nonneg_ratio: f64,
    pub loss_days: usize,
    pub test_days: usize,
    pub converged: bool,
}

/// Loss-day count, risk per year and non-negative ratio from daily profits.
pub fn profit_metrics(profits: &[f64]) -> (f64, usize, f64, f64) {
    let n = profits.len() as f64;
    let expected = profits.iter().sum::<f64>() / n;
    let losses = profits.iter().filter(|&&p| p < LOSS_THRESHOLD).count();
    (expected, losses, losses as f64 * DAYS_PER_YEAR / n, 1.0 - losses as f64 / n)
}

/// Fitted models, calibrations and the test days they are evaluated on.
#[derive(Debug, Clone)]
pub struct Backtest {
    spec: StorageSpec,
    models: ModelSet,
    calibrations: Vec<Calibration>,
    test_days: Vec<PriceDay>,
    tol: f64,
}

impl Backtest {
    /// Fits every model on `train_days` and calibrates every strategy.
    pub fn fit(
        spec: &StorageSpec,
        train_days: &[PriceDay],
        test_days: Vec<PriceDay>,
        lognormal_clip: f64,
        tol: f64,
    ) -> Result<Self> {
        let models = ModelSet::fit(train_days, lognormal_clip)?;
        let calibrations = calibrate_all(&models, spec, tol)?;
        Self::new(spec.clone(), models, calibrations, test_days, tol)
    }

    pub fn new(
        spec: StorageSpec,
        models: ModelSet,
        calibrations: Vec<Calibration>,
        test_days: Vec<PriceDay>,
        tol: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if test_days.is_empty() {
            return Err(Error::TooFewDays { needed: 1, got: 0 });
        }
        Ok(Self { spec, models, calibrations, test_days, tol })
    }

    pub fn spec(&self) -> &StorageSpec {
        &self.spec
    }

    pub fn models(&self) -> &ModelSet {
        &self.models
    }

    pub fn calibrations(&self) -> &[Calibration] {
        &self.calibrations
    }

    pub fn test_days(&self) -> &[PriceDay] {
        &self.test_days
    }

    pub fn calibration(&self, strategy: StrategyId) -> Result<&Calibration> {
        self.calibrations
            .iter()
            .find(|c| c.strategy == strategy)
            .ok_or_else(|| Error::InvalidParameter(format!("{strategy} was not calibrated")))
    }

    /// Solves a cell without evaluating it.
    pub fn solve(&self, strategy: StrategyId, gamma: f64) -> Result<CellSolution> {
        self.cell(strategy, gamma, |param| self.models.solve(strategy, param, &self.spec, self.tol))
    }

    /// Uncertainty set of a robust strategy at normalized budget `gamma`.
    pub fn uncertainty_set(&self, strategy: StrategyId, gamma: f64) -> Result<UncertaintyModel> {
        self.cell(strategy, gamma, |param| self.models.uncertainty_set(strategy, param))
    }

    fn cell<T>(&self, strategy: StrategyId, gamma: f64, f: impl FnOnce(f64) -> Result<T>) -> Result<T> {
        let wrap = |e: Error| Error::Cell { strategy, gamma, source: Box::new(e) };
        if !(0.0..=1.0).contains(&gamma) {
            return Err(wrap(Error::InvalidParameter(format!("normalized budget {gamma} outside [0, 1]"))));
        }
        let param = self.calibration(strategy)?.parameter(gamma);
        f(param).map_err(wrap)
    }

    pub fn run_strategy(&self, strategy: StrategyId, gamma: f64) -> Result<FrontierPoint> {
        let sol = self.solve(strategy, gamma)?;
        let profits = self
            .test_days
            .iter()
            .map(|d| realized_profit(&sol.schedule, &d.prices))
            .collect::<Result<Vec<f64>>>()?;
        let (expected_profit, loss_days, risk_days_per_year, nonneg_ratio) = profit_metrics(&profits);
        Ok(FrontierPoint {
            gamma,
            parameter: self.calibration(strategy)?.parameter(gamma),
            worst_case: sol.worst_case,
            expected_profit,
            risk_days_per_year,
            nonneg_ratio,
            loss_days,
            test_days: profits.len(),
            converged: sol.converged,
        })
    }

    pub fn build_frontier(&self, strategy: StrategyId, grid: &[f64]) -> Result<Vec<FrontierPoint>> {
        let grid = sorted_grid(grid)?;
        grid.par_iter().map(|&g| self.run_strategy(strategy, g)).collect()
    }

    /// Every strategy × Γ cell, computed in parallel and reported in
    /// [`StrategyId::ALL`] order, then Γ ascending.
    pub fn compare_all(&self, strategies: &[StrategyId], grid: &[f64], dataset: DatasetInfo) -> Result<BacktestReport> {
        let grid = sorted_grid(grid)?;
        let mut strategies = strategies.to_vec();
        strategies.sort();
        strategies.dedup();
        if strategies.is_empty() {
            return Err(Error::InvalidParameter("no strategies selected".into()));
        }
        let cells: Vec<(StrategyId, f64)> =
            strategies.iter().flat_map(|&s| grid.iter().map(move |&g| (s, g))).collect();
        let points = cells
            .par_iter()
            .map(|&(s, g)| self.run_strategy(s, g))
            .collect::<Result<Vec<_>>>()?;
        let mut points = points.into_iter();
        let frontiers = strategies
            .iter()
            .map(|&strategy| StrategyFrontier { strategy, points: points.by_ref().take(grid.len()).collect() })
            .collect();
        let calibrations = self.calibrations.iter().filter(|c| strategies.contains(&c.strategy)).cloned().collect();
        Ok(BacktestReport {
            dataset,
            storage: self.spec.clone(),
            gamma_grid: grid,
            calibrations,
            frontiers,
        })
    }
}

/// Calibrates all six strategies (in parallel, returned in order).
pub fn calibrate_all(models: &ModelSet, spec: &StorageSpec, tol: f64) -> Result<Vec<Calibration>> {
    StrategyId::ALL.par_iter().map(|&s| calibrate_budget(s, models, spec, tol)).collect()
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty budget grid".into()));
    }
    if let Some(g) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::InvalidParameter(format!("budget {g} outside [0, 1]")));
    }
    let mut out = grid.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}
