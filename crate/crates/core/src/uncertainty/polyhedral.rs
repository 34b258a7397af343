use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{matrix_rows, require_budget, HourlyStats};
use crate::error::{Error, Result};

/// `{λ : Dλ ≤ d}` plus the nominal point used for the negative-price rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralSet {
    #[serde(with = "matrix_rows")]
    pub constraint_matrix: DMatrix<f64>,
    pub constraint_rhs: Vec<f64>,
    pub center: Vec<f64>,
}

impl PolyhedralSet {
    pub fn new(constraint_matrix: DMatrix<f64>, constraint_rhs: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if constraint_matrix.nrows() != constraint_rhs.len() || constraint_matrix.ncols() != center.len() {
            return Err(Error::InvalidParameter(format!(
                "polyhedron D is {}x{}, d has {} rows, center has {} entries",
                constraint_matrix.nrows(),
                constraint_matrix.ncols(),
                constraint_rhs.len(),
                center.len()
            )));
        }
        let set = Self { constraint_matrix, constraint_rhs, center };
        if !set.contains(&set.center, 1e-9) {
            return Err(Error::InvalidParameter("center lies outside the polyhedron".into()));
        }
        Ok(set)
    }

    /// Box `lower ≤ λ ≤ upper` as `D = [I; −I]`, `d = [upper; −lower]`.
    pub fn from_box(lower: &[f64], upper: &[f64], center: Vec<f64>) -> Result<Self> {
        let t = lower.len();
        if upper.len() != t {
            return Err(Error::LengthMismatch { expected: t, got: upper.len() });
        }
        if let Some(h) = (0..t).find(|&h| lower[h] > upper[h]) {
            return Err(Error::InvalidParameter(format!("empty box at hour {h}")));
        }
        let d = DMatrix::from_fn(2 * t, t, |i, j| match i {
            i if i < t && i == j => 1.0,
            i if i >= t && i - t == j => -1.0,
            _ => 0.0,
        });
        let rhs = upper.iter().copied().chain(lower.iter().map(|l| -l)).collect();
        Self::new(d, rhs, center)
    }

    pub fn horizon(&self) -> usize {
        self.center.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraint_rhs.len()
    }

    pub fn contains(&self, lambda: &[f64], tol: f64) -> bool {
        self.constraint_matrix
            .row_iter()
            .zip(&self.constraint_rhs)
            .all(|(row, d)| row.iter().zip(lambda).map(|(a, l)| a * l).sum::<f64>() <= d + tol)
    }

    /// `(lower, upper)` when the set is an axis-aligned box in `[I; −I]` form.
    pub fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let t = self.horizon();
        if self.num_rows() != 2 * t {
            return None;
        }
        let is_box = self.constraint_matrix.row_iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, &a)| {
                let expected = if i < t && i == j {
                    1.0
                } else if i >= t && i - t == j {
                    -1.0
                } else {
                    0.0
                };
                a == expected
            })
        });
        is_box.then(|| {
            let upper = self.constraint_rhs[..t].to_vec();
            let lower = self.constraint_rhs[t..].iter().map(|v| -v).collect();
            (lower, upper)
        })
    }
}

/// Per-hour box between the `0.5 − g/2` and `0.5 + g/2` empirical quantiles,
/// centered on the median. `g = 0` is the median point, `g = 1` the sample range.
pub fn build_poly_quantile(stats: &HourlyStats, coverage: f64) -> Result<PolyhedralSet> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::InvalidParameter(format!("quantile coverage {coverage} outside [0, 1]")));
    }
    let t = stats.horizon();
    let lower: Vec<f64> = (0..t).map(|h| stats.quantile(h, 0.5 - coverage / 2.0)).collect();
    let upper: Vec<f64> = (0..t).map(|h| stats.quantile(h, 0.5 + coverage / 2.0)).collect();
    PolyhedralSet::from_box(&lower, &upper, stats.median())
}

/// Per-hour box `μ_t ± r·σ_t`.
pub fn build_poly_mean_std(stats: &HourlyStats, r: f64) -> Result<PolyhedralSet> {
    require_budget(r)?;
    let lower: Vec<f64> = stats.mean.iter().zip(&stats.std).map(|(m, s)| m - r * s).collect();
    let upper: Vec<f64> = stats.mean.iter().zip(&stats.std).map(|(m, s)| m + r * s).collect();
    PolyhedralSet::from_box(&lower, &upper, stats.mean.clone())
}
