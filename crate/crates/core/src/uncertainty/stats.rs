use serde::{Deserialize, Serialize};

use super::{mean_day, require_days, sample_std};
use crate::error::Result;
use crate::market::{PriceDay, HOURS_PER_DAY};

/// Per-hour training statistics: mean, sample std and the sorted samples
/// backing the empirical quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    sorted: Vec<Vec<f64>>,
}

pub fn estimate_hourly_stats(days: &[PriceDay]) -> Result<HourlyStats> {
    require_days(days, 2)?;
    let m = days.len();
    let mean = mean_day(days);
    let std = (0..HOURS_PER_DAY)
        .map(|h| sample_std(days.iter().map(|d| d.prices[h]), mean[h], m))
        .collect();
    let sorted = (0..HOURS_PER_DAY)
        .map(|h| {
            let mut col: Vec<f64> = days.iter().map(|d| d.prices[h]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    Ok(HourlyStats { mean, std, sorted })
}

impl HourlyStats {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sorted.first().map_or(0, Vec::len)
    }

    /// Empirical quantile of level `q ∈ [0, 1]` for `hour`, linearly
    /// interpolated between order statistics at position `(m − 1)·q`.
    pub fn quantile(&self, hour: usize, q: f64) -> f64 {
        let s = &self.sorted[hour];
        let pos = (s.len() - 1) as f64 * q.clamp(0.0, 1.0);
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        match s.get(lo + 1) {
            Some(next) if frac > 0.0 => s[lo] + frac * (next - s[lo]),
            _ => s[lo],
        }
    }

    pub fn median(&self) -> Vec<f64> {
        (0..self.horizon()).map(|h| self.quantile(h, 0.5)).collect()
    }
}
