use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{matrix_rows, mean_day, require_budget, require_days};
use crate::error::{Error, Result};
use crate::market::PriceDay;

/// `{λ̄ + Q·u : ‖u‖ ≤ 1}` with `Q` symmetric positive semidefinite.
/// A zero shape is the single point `λ̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidalSet {
    pub center: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub shape: DMatrix<f64>,
}

impl EllipsoidalSet {
    pub fn new(center: Vec<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let t = center.len();
        if shape.nrows() != t || shape.ncols() != t {
            return Err(Error::InvalidParameter(format!(
                "shape is {}x{}, center has {t} entries",
                shape.nrows(),
                shape.ncols()
            )));
        }
        let scale = shape.amax().max(1.0);
        if (&shape - shape.transpose()).amax() > 1e-9 * scale {
            return Err(Error::InvalidParameter("shape matrix is not symmetric".into()));
        }
        if shape.amax() > 0.0 {
            let min_eig = shape.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-9 * scale {
                return Err(Error::InvalidParameter(format!("shape has negative eigenvalue {min_eig:e}")));
            }
        }
        Ok(Self { center, shape })
    }

    pub fn point(center: Vec<f64>) -> Self {
        let t = center.len();
        Self { center, shape: DMatrix::zeros(t, t) }
    }

    pub fn horizon(&self) -> usize {
        self.center.len()
    }

    pub fn is_point(&self) -> bool {
        self.shape.iter().all(|&q| q == 0.0)
    }

    /// `λ̄ + Q·u`.
    pub fn point_at(&self, u: &[f64]) -> Vec<f64> {
        let lifted = &self.shape * DVector::from_column_slice(u);
        self.center.iter().zip(lifted.iter()).map(|(c, v)| c + v).collect()
    }

    /// Smallest `‖u‖` with `λ = λ̄ + Q·u`, or infinity when `λ − λ̄` leaves the range of `Q`.
    pub fn gauge(&self, lambda: &[f64]) -> f64 {
        let diff = DVector::from_iterator(
            self.horizon(),
            lambda.iter().zip(&self.center).map(|(l, c)| l - c),
        );
        let eig = self.shape.clone().symmetric_eigen();
        let cutoff = 1e-12 * eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let mut u2 = 0.0;
        let mut outside = 0.0f64;
        for (k, &s) in eig.eigenvalues.iter().enumerate() {
            let proj = eig.eigenvectors.column(k).dot(&diff);
            if s > cutoff {
                u2 += (proj / s).powi(2);
            } else {
                outside = outside.max(proj.abs());
            }
        }
        if outside > 1e-9 * (1.0 + diff.amax()) {
            f64::INFINITY
        } else {
            u2.sqrt()
        }
    }

    pub fn contains(&self, lambda: &[f64], tol: f64) -> bool {
        self.gauge(lambda) <= 1.0 + tol
    }
}

/// Sample mean day and covariance across days (divisor `m − 1`).
pub fn sample_covariance(days: &[PriceDay]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    require_days(days, 2)?;
    let mean = mean_day(days);
    let t = mean.len();
    let mut cov = DMatrix::zeros(t, t);
    for day in days {
        let dev = DVector::from_iterator(t, day.prices.iter().zip(&mean).map(|(p, m)| p - m));
        cov.ger(1.0, &dev, &dev, 1.0);
    }
    cov /= (days.len() - 1) as f64;
    Ok((mean, cov))
}

/// `1e−8 · trace(Σ) / T`, added to the diagonal to keep shapes full rank.
pub fn covariance_ridge(cov: &DMatrix<f64>) -> f64 {
    1e-8 * cov.trace() / cov.nrows() as f64
}

/// Symmetric PSD square root; negative eigenvalues from roundoff are clipped.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let s = v * DMatrix::from_diagonal(&roots) * v.transpose();
    (&s + s.transpose()) * 0.5
}

/// Ellipsoid centered on the mean day with shape `r·(Σ + δI)^{1/2}`.
pub fn build_ellip_cov(days: &[PriceDay], r: f64) -> Result<EllipsoidalSet> {
    require_budget(r)?;
    let (mean, mut cov) = sample_covariance(days)?;
    let ridge = covariance_ridge(&cov);
    for i in 0..cov.nrows() {
        cov[(i, i)] += ridge;
    }
    Ok(scale_ellipsoid(&EllipsoidalSet { center: mean, shape: psd_sqrt(&cov) }, r))
}

/// `(λ̄, r·Q)`.
pub fn scale_ellipsoid(set: &EllipsoidalSet, r: f64) -> EllipsoidalSet {
    EllipsoidalSet { center: set.center.clone(), shape: &set.shape * r }
}
