use serde::{Deserialize, Serialize};

use super::StrategyId;
use crate::error::{Error, Result};
use crate::market::PriceDay;
use crate::robust::{
    feasible_set_for, reformulate_chance_normal, reformulate_ellipsoidal, reformulate_polyhedral,
    solve_chance_lognormal, KAPPA_TOL, LOGNORMAL_MAX_ITER,
};
use crate::storage::{build_feasible_set, Schedule, StorageSpec};
use crate::uncertainty::{
    build_ellip_cov, build_poly_mean_std, build_poly_quantile, estimate_hourly_stats, fit_lognormal, fit_normal,
    mvee, scale_ellipsoid, EllipsoidalSet, HourlyStats, LogNormalModel, NormalModel, UncertaintyModel, MVEE_TOL,
};

/// What a strategy keeps from the training data. Ellipsoids are stored at unit budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Stats(HourlyStats),
    Ellipsoid(EllipsoidalSet),
    Normal(NormalModel),
    LogNormal(LogNormalModel),
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedModel::Stats(_) => "stats",
            FittedModel::Ellipsoid(_) => "ellipsoid",
            FittedModel::Normal(_) => "normal",
            FittedModel::LogNormal(_) => "lognormal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub strategy: StrategyId,
    pub model: FittedModel,
}

/// One fitted model per strategy, in [`StrategyId::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelSet {
    records: Vec<ModelRecord>,
}

/// Schedule and guarantee for one (strategy, parameter) pair.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub schedule: Schedule,
    pub worst_case: f64,
    /// False only when the lognormal iteration hit its cap.
    pub converged: bool,
}

impl ModelSet {
    pub fn fit(train_days: &[PriceDay], lognormal_clip: f64) -> Result<Self> {
        let stats = estimate_hourly_stats(train_days)?;
        let points: Vec<Vec<f64>> = train_days.iter().map(|d| d.prices.to_vec()).collect();
        let records = StrategyId::ALL
            .iter()
            .map(|&strategy| {
                let model = match strategy {
                    StrategyId::PolyQuantile | StrategyId::PolyMeanStd => FittedModel::Stats(stats.clone()),
                    StrategyId::EllipMinVol => FittedModel::Ellipsoid(mvee(&points, MVEE_TOL)?),
                    StrategyId::EllipCov => FittedModel::Ellipsoid(build_ellip_cov(train_days, 1.0)?),
                    StrategyId::ChanceNormal => FittedModel::Normal(fit_normal(train_days)?),
                    StrategyId::ChanceLogNormal => FittedModel::LogNormal(fit_lognormal(train_days, lognormal_clip)?),
                };
                Ok(ModelRecord { strategy, model })
            })
            .collect::<Result<_>>()?;
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn get(&self, strategy: StrategyId) -> Result<&FittedModel> {
        self.records
            .iter()
            .find(|r| r.strategy == strategy)
            .map(|r| &r.model)
            .ok_or_else(|| Error::InvalidParameter(format!("no fitted model for {strategy}")))
    }

    /// The uncertainty set of a robust strategy at raw budget `r`.
    pub fn uncertainty_set(&self, strategy: StrategyId, r: f64) -> Result<UncertaintyModel> {
        match (strategy, self.get(strategy)?) {
            (StrategyId::PolyQuantile, FittedModel::Stats(s)) => Ok(UncertaintyModel::Polyhedral(build_poly_quantile(s, r)?)),
            (StrategyId::PolyMeanStd, FittedModel::Stats(s)) => Ok(UncertaintyModel::Polyhedral(build_poly_mean_std(s, r)?)),
            (StrategyId::EllipMinVol | StrategyId::EllipCov, FittedModel::Ellipsoid(e)) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidParameter(format!("budget {r} must be finite and nonnegative")));
                }
                Ok(UncertaintyModel::Ellipsoidal(scale_ellipsoid(e, r)))
            }
            (s, m) if s.is_robust() => Err(Error::InvalidParameter(format!("{s} cannot use a {} model", m.kind()))),
            (s, _) => Err(Error::InvalidParameter(format!("{s} is not a robust strategy"))),
        }
    }

    /// Solves one strategy at `parameter`: a raw budget for robust strategies,
    /// a confidence level for chance strategies.
    pub fn solve(&self, strategy: StrategyId, parameter: f64, spec: &StorageSpec, tol: f64) -> Result<CellSolution> {
        let done = |sol: crate::robust::RobustSolution| CellSolution {
            schedule: sol.schedule,
            worst_case: sol.worst_case,
            converged: true,
        };
        match (strategy, self.get(strategy)?) {
            (StrategyId::ChanceNormal, FittedModel::Normal(m)) => {
                let fs = build_feasible_set(spec, &m.mean)?;
                Ok(done(reformulate_chance_normal(&fs, m, parameter)?.solve(tol)?))
            }
            (StrategyId::ChanceLogNormal, FittedModel::LogNormal(m)) => {
                let fs = feasible_set_for(spec, &UncertaintyModel::LogNormal(m.clone()))?;
                let out = solve_chance_lognormal(&fs, m, parameter, LOGNORMAL_MAX_ITER, KAPPA_TOL, tol)?;
                Ok(CellSolution { schedule: out.schedule, worst_case: out.worst_case, converged: out.converged })
            }
            (s, _) if s.is_robust() => {
                let set = self.uncertainty_set(s, parameter)?;
                let fs = feasible_set_for(spec, &set)?;
                let program = match &set {
                    UncertaintyModel::Polyhedral(p) => reformulate_polyhedral(&fs, p)?,
                    UncertaintyModel::Ellipsoidal(e) => reformulate_ellipsoidal(&fs, e)?,
                    other => return Err(Error::NotASet(other.kind())),
                };
                Ok(done(program.solve(tol)?))
            }
            (s, m) => Err(Error::InvalidParameter(format!("{s} cannot use a {} model", m.kind()))),
        }
    }
}
