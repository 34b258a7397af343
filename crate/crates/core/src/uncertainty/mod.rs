//! Price uncertainty representations estimated from training days.
//!
//! Two polyhedral boxes (empirical quantiles, mean ± k·std), two ellipsoids
//! (covariance-shaped, minimum-volume enclosing) and two per-hour
//! distributions (normal, lognormal). Every set builder takes a nonnegative
//! budget and is nested in it: a larger budget never yields a smaller set.

mod distributions;
mod ellipsoid;
mod mvee;
mod polyhedral;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{PriceDay, HOURS_PER_DAY};

pub use distributions::{fit_lognormal, fit_normal, fw_moment_match, LogNormalModel, MatchedLogNormal, NormalModel};
pub use ellipsoid::{build_ellip_cov, covariance_ridge, sample_covariance, scale_ellipsoid, EllipsoidalSet};
pub use mvee::{mvee, mvee_with_limit, MVEE_MAX_ITER, MVEE_TOL};
pub use polyhedral::{build_poly_mean_std, build_poly_quantile, PolyhedralSet};
pub use stats::{estimate_hourly_stats, HourlyStats};

/// Default floor applied to prices before taking logs, $/MWh.
pub const DEFAULT_LOGNORMAL_CLIP: f64 = 0.01;

/// A materialized uncertainty model, ready to be reformulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UncertaintyModel {
    Polyhedral(PolyhedralSet),
    Ellipsoidal(EllipsoidalSet),
    Normal(NormalModel),
    LogNormal(LogNormalModel),
}

impl UncertaintyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            UncertaintyModel::Polyhedral(_) => "polyhedral",
            UncertaintyModel::Ellipsoidal(_) => "ellipsoidal",
            UncertaintyModel::Normal(_) => "normal",
            UncertaintyModel::LogNormal(_) => "lognormal",
        }
    }

    /// Nominal prices: set center, or the distribution mean.
    pub fn center(&self) -> Vec<f64> {
        match self {
            UncertaintyModel::Polyhedral(s) => s.center.clone(),
            UncertaintyModel::Ellipsoidal(s) => s.center.clone(),
            UncertaintyModel::Normal(m) => m.mean.clone(),
            UncertaintyModel::LogNormal(m) => (0..m.horizon()).map(|t| m.moments(t).0).collect(),
        }
    }
}

fn require_days(days: &[PriceDay], needed: usize) -> Result<()> {
    if days.len() < needed {
        return Err(Error::TooFewDays { needed, got: days.len() });
    }
    Ok(())
}

fn require_budget(r: f64) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("budget {r} must be finite and nonnegative")));
    }
    Ok(())
}

/// Hour-by-hour sample mean over days, accumulated in day order.
///
/// Every mean-centered model goes through this one function so their centers
/// agree bit for bit.
pub(crate) fn mean_day(days: &[PriceDay]) -> Vec<f64> {
    let m = days.len() as f64;
    (0..HOURS_PER_DAY)
        .map(|h| days.iter().map(|d| d.prices[h]).sum::<f64>() / m)
        .collect()
}

/// Sample standard deviation (divisor `m − 1`) given the mean.
pub(crate) fn sample_std(samples: impl Iterator<Item = f64>, mean: f64, m: usize) -> f64 {
    let ss: f64 = samples.map(|x| (x - mean) * (x - mean)).sum();
    (ss / (m as f64 - 1.0)).sqrt()
}

/// Row-major `Vec<Vec<f64>>` serde for dense matrices.
pub(crate) mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
    }
}
