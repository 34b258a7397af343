//! Minimum-volume enclosing ellipsoid by Khachiyan's barycentric coordinate
//! ascent, with Todd–Yıldırım away steps.
//!
//! Points are lifted to `q_i = (z_i, 1) ∈ ℝ^{k+1}` and weights `u` on the
//! simplex are updated until every `M_i = q_iᵀ X(u)⁻¹ q_i` with
//! `X(u) = Σ u_i q_i q_iᵀ` is at most `(k + 1)(1 + tol)`. Each step is a
//! rank-one change of `X`, so `X⁻¹` and all `M_i` are updated in `O(m·k)`
//! by Sherman–Morrison instead of being refactored.
//!
//! Directions in which the cloud has no spread are split off beforehand and
//! given the covariance ridge as their radius.

use nalgebra::{DMatrix, DVector};

use super::ellipsoid::{covariance_ridge, psd_sqrt};
use super::EllipsoidalSet;
use crate::error::{Error, Result};

pub const MVEE_TOL: f64 = 1e-6;
pub const MVEE_MAX_ITER: usize = 100_000;

/// Eigenvalues below this fraction of the largest are treated as flat directions.
const RANK_CUTOFF: f64 = 1e-10;
const REFRESH_EVERY: usize = 500;

pub fn mvee(points: &[Vec<f64>], tol: f64) -> Result<EllipsoidalSet> {
    mvee_with_limit(points, tol, MVEE_MAX_ITER)
}

pub fn mvee_with_limit(points: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<EllipsoidalSet> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidParameter("no points to enclose".into()));
    };
    let n = first.len();
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidParameter("points must share a positive dimension".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let m = points.len();

    let mean = DVector::from_iterator(n, (0..n).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / m as f64));
    let mut cov = DMatrix::zeros(n, n);
    for p in points {
        let dev = DVector::from_column_slice(p) - &mean;
        cov.ger(1.0, &dev, &dev, 1.0);
    }
    cov /= (m.max(2) - 1) as f64;
    let ridge = covariance_ridge(&cov);

    let eig = cov.clone().symmetric_eigen();
    let top = eig.eigenvalues.max();
    let kept: Vec<usize> = (0..n).filter(|&i| top > 0.0 && eig.eigenvalues[i] > RANK_CUTOFF * top).collect();
    if kept.is_empty() {
        return Ok(EllipsoidalSet { center: mean.iter().copied().collect(), shape: DMatrix::zeros(n, n) });
    }
    let basis = DMatrix::from_fn(n, kept.len(), |i, j| eig.eigenvectors[(i, kept[j])]);

    // Reduced coordinates, one column per point.
    let reduced = DMatrix::from_fn(kept.len(), m, |i, s| {
        (0..n).map(|j| basis[(j, i)] * (points[s][j] - mean[j])).sum()
    });
    let (center_z, shape_z) = khachiyan(&reduced, tol, max_iter)?;

    let center = &mean + &basis * center_z;
    let projector = &basis * basis.transpose();
    let complement = DMatrix::identity(n, n) - &projector;
    let mut shape = &basis * shape_z * basis.transpose() + complement * ridge.sqrt();
    shape = (&shape + shape.transpose()) * 0.5;
    Ok(EllipsoidalSet { center: center.iter().copied().collect(), shape })
}

/// MVEE of the columns of `z` (affinely spanning `ℝᵏ`); returns center and `Q`.
fn khachiyan(z: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (k, m) = z.shape();
    let d = (k + 1) as f64;
    let lifted = DMatrix::from_fn(k + 1, m, |i, s| if i < k { z[(i, s)] } else { 1.0 });

    let mut u = vec![1.0 / m as f64; m];
    let (mut x_inv, mut dist) = refresh(&lifted, &u)?;
    let mut iter = 0;
    loop {
        let (j, &kplus) = argmax(&dist);
        let up = kplus / d - 1.0;
        if up <= tol {
            // Confirm against a fresh factorization before stopping.
            (x_inv, dist) = refresh(&lifted, &u)?;
            if dist.iter().all(|&v| v / d - 1.0 <= tol) {
                break;
            }
            continue;
        }
        if iter >= max_iter {
            return Err(Error::NonConvergence { iterations: iter, violation: up });
        }
        iter += 1;

        let (i, kminus) = dist
            .iter()
            .enumerate()
            .filter(|(s, _)| u[*s] > 0.0)
            .map(|(s, &v)| (s, v))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("weights stay on the simplex");
        let down = 1.0 - kminus / d;

        let (idx, tau) = if up >= down {
            (j, (kplus - d) / (d * (kplus - 1.0)))
        } else {
            let drop = u[i] / (1.0 - u[i]);
            let step = if kminus > 1.0 { ((d - kminus) / (d * (kminus - 1.0))).min(drop) } else { drop };
            (i, -step)
        };

        let v = &x_inv * lifted.column(idx);
        let denom = 1.0 - tau + tau * dist[idx];
        let w = lifted.tr_mul(&v);
        for (s, ds) in dist.iter_mut().enumerate() {
            *ds = (*ds - tau * w[s] * w[s] / denom) / (1.0 - tau);
        }
        x_inv.ger(-tau / denom, &v, &v, 1.0);
        x_inv /= 1.0 - tau;
        for us in u.iter_mut() {
            *us *= 1.0 - tau;
        }
        u[idx] += tau;
        if u[idx] < 1e-15 {
            u[idx] = 0.0;
        }

        if iter % REFRESH_EVERY == 0 {
            (x_inv, dist) = refresh(&lifted, &u)?;
        }
    }

    let zu = DVector::from_column_slice(&u);
    let center = z * &zu;
    let mut scatter = DMatrix::zeros(k, k);
    for (s, &us) in u.iter().enumerate() {
        if us > 0.0 {
            let col = z.column(s);
            scatter.ger(us, &col, &col, 1.0);
        }
    }
    scatter.ger(-1.0, &center, &center, 1.0);
    // Ellipsoid {x : (x−c)ᵀ (k·S)⁻¹ (x−c) ≤ 1}, i.e. Q = (k·S)^{1/2}.
    let scaled = &scatter * k as f64;
    let chol = scaled
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("degenerate weighted scatter in ellipsoid fit".into()))?;
    let worst = (0..m)
        .map(|s| {
            let dev = z.column(s) - &center;
            dev.dot(&chol.solve(&dev))
        })
        .fold(0.0, f64::max);
    let mut shape = psd_sqrt(&scaled);
    if worst > 1.0 {
        shape *= worst.sqrt();
    }
    Ok((center, shape))
}

/// `X(u)⁻¹` and every `M_s = q_sᵀ X⁻¹ q_s`, computed from scratch.
fn refresh(lifted: &DMatrix<f64>, u: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let dim = lifted.nrows();
    let mut x = DMatrix::zeros(dim, dim);
    for (s, &us) in u.iter().enumerate() {
        if us > 0.0 {
            let col = lifted.column(s);
            x.ger(us, &col, &col, 1.0);
        }
    }
    let x_inv = x
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("weighted point matrix lost full rank".into()))?
        .inverse();
    let y = &x_inv * lifted;
    let dist = (0..lifted.ncols()).map(|s| lifted.column(s).dot(&y.column(s))).collect();
    Ok((x_inv, dist))
}

fn argmax(v: &[f64]) -> (usize, &f64) {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty")
}
