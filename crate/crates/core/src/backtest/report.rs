use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Calibration, FrontierPoint, ModelSet, StrategyId};
use crate::error::{Error, Result};
use crate::storage::StorageSpec;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Which days the report was trained and tested on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub train_years: Vec<i32>,
    pub test_years: Vec<i32>,
    pub train_days: usize,
    pub test_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFrontier {
    pub strategy: StrategyId,
    pub points: Vec<FrontierPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub dataset: DatasetInfo,
    pub storage: StorageSpec,
    pub gamma_grid: Vec<f64>,
    pub calibrations: Vec<Calibration>,
    pub frontiers: Vec<StrategyFrontier>,
}

impl BacktestReport {
    pub fn frontier(&self, strategy: StrategyId) -> Option<&[FrontierPoint]> {
        self.frontiers.iter().find(|f| f.strategy == strategy).map(|f| f.points.as_slice())
    }

    pub fn num_cells(&self) -> usize {
        self.frontiers.iter().map(|f| f.points.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `strategy,gamma,worst_case,expected_profit,risk_days_per_year,nonneg_ratio`
    pub fn write_frontier_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "gamma", "worst_case", "expected_profit", "risk_days_per_year", "nonneg_ratio"])?;
        for f in &self.frontiers {
            for p in &f.points {
                w.write_record([
                    f.strategy.to_string(),
                    p.gamma.to_string(),
                    p.worst_case.to_string(),
                    p.expected_profit.to_string(),
                    p.risk_days_per_year.to_string(),
                    p.nonneg_ratio.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything fitted on the training years, as written by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub storage: StorageSpec,
    pub train_years: Vec<i32>,
    pub train_days: usize,
    pub lognormal_clip: f64,
    pub solver_tol: f64,
    pub models: ModelSet,
    pub calibrations: Vec<Calibration>,
}

impl ModelBundle {
    pub fn any_degenerate(&self) -> bool {
        self.calibrations.iter().any(|c| c.degenerate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: Self = serde_json::from_str(text)?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "model bundle format {} (expected {BUNDLE_FORMAT_VERSION})",
                bundle.format_version
            )));
        }
        Ok(bundle)
    }
}
