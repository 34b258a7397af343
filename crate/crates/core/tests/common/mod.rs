#![allow(dead_code)]

use std::f64::consts::PI;

use arbfront::backtest::{Backtest, DatasetInfo};
use arbfront::conic::DEFAULT_TOL;
use arbfront::market::PriceDay;
use arbfront::storage::StorageSpec;
use arbfront::synthetic::{generate, SyntheticConfig};
use arbfront::uncertainty::{UncertaintyModel, DEFAULT_LOGNORMAL_CLIP};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const TRAIN_LAST_YEAR: i32 = 2021;

/// Synthetic 2018–2021 training days and 2022–2023 test days.
pub fn synthetic_split() -> (Vec<PriceDay>, Vec<PriceDay>) {
    generate(&SyntheticConfig::default()).unwrap().into_iter().partition(|d| d.year() <= TRAIN_LAST_YEAR)
}

pub fn synthetic_backtest() -> Backtest {
    let (train, test) = synthetic_split();
    Backtest::fit(&StorageSpec::default(), &train, test, DEFAULT_LOGNORMAL_CLIP, DEFAULT_TOL).unwrap()
}

pub fn dataset_info(bt: &Backtest) -> DatasetInfo {
    DatasetInfo {
        source: "synthetic".into(),
        train_years: (2018..=TRAIN_LAST_YEAR).collect(),
        test_years: vec![2022, 2023],
        train_days: 1461,
        test_days: bt.test_days().len(),
    }
}

/// A price vector drawn inside a box (uniformly) or an ellipsoid (uniformly in `u`).
pub fn sample_in_set(model: &UncertaintyModel, rng: &mut impl Rng) -> Vec<f64> {
    match model {
        UncertaintyModel::Polyhedral(set) => {
            let (lo, hi) = set.box_bounds().expect("strategy sets are boxes");
            lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect()
        }
        UncertaintyModel::Ellipsoidal(set) => {
            let n = set.horizon();
            let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = rng.random::<f64>().powf(1.0 / n as f64);
            let u: Vec<f64> = dir.iter().map(|v| v / norm * radius).collect();
            set.point_at(&u)
        }
        other => panic!("{} has no set to sample", other.kind()),
    }
}

/// Minimum-area ellipse enclosing `points`, found by a log-barrier Newton
/// method on the convex form `min −log det A` s.t. `‖A xᵢ + b‖ ≤ 1` with
/// `A` symmetric 2×2. The ellipse `{x : ‖Ax + b‖ ≤ 1}` has area `π / det A`.
pub fn reference_ellipse_area(points: &[[f64; 2]]) -> f64 {
    // v = [a11, a12, a22, b1, b2]
    let residuals = |v: &[f64; 5]| -> Option<Vec<([f64; 2], f64)>> {
        if v[0] <= 0.0 || v[0] * v[2] - v[1] * v[1] <= 0.0 {
            return None;
        }
        points
            .iter()
            .map(|x| {
                let g = [v[0] * x[0] + v[1] * x[1] + v[3], v[1] * x[0] + v[2] * x[1] + v[4]];
                let r = 1.0 - g[0] * g[0] - g[1] * g[1];
                (r > 0.0).then_some((g, r))
            })
            .collect()
    };
    let barrier = |v: &[f64; 5], mu: f64| -> f64 {
        match residuals(v) {
            Some(rs) => -(v[0] * v[2] - v[1] * v[1]).ln() - mu * rs.iter().map(|(_, r)| r.ln()).sum::<f64>(),
            None => f64::INFINITY,
        }
    };
    // Newton system: each residual is affine in v through g = J v with
    // J = [[x₁, x₂, 0, 1, 0], [0, x₁, x₂, 0, 1]].
    let newton = |v: &[f64; 5], mu: f64| -> (DVector<f64>, DMatrix<f64>) {
        let det = v[0] * v[2] - v[1] * v[1];
        let d_det = DVector::from_column_slice(&[v[2], -2.0 * v[1], v[0]]);
        let dd_det = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, -2.0, 0.0, 1.0, 0.0, 0.0]);
        let mut grad = DVector::zeros(5);
        let mut hess = DMatrix::zeros(5, 5);
        grad.rows_mut(0, 3).copy_from(&(-&d_det / det));
        hess.view_mut((0, 0), (3, 3)).copy_from(&(-dd_det / det + &d_det * d_det.transpose() / (det * det)));
        for ((g, r), x) in residuals(v).expect("interior point").iter().zip(points) {
            let jac = DMatrix::from_row_slice(2, 5, &[x[0], x[1], 0.0, 1.0, 0.0, 0.0, x[0], x[1], 0.0, 1.0]);
            let jg = jac.transpose() * DVector::from_column_slice(g);
            grad += &jg * (2.0 * mu / r);
            hess += (jac.transpose() * &jac) * (2.0 * mu / r) + &jg * jg.transpose() * (4.0 * mu / (r * r));
        }
        (grad, hess)
    };

    let n = points.len() as f64;
    let centroid = [points.iter().map(|p| p[0]).sum::<f64>() / n, points.iter().map(|p| p[1]).sum::<f64>() / n];
    let radius = points.iter().map(|p| (p[0] - centroid[0]).hypot(p[1] - centroid[1])).fold(0.0, f64::max) * 1.5;
    let a = 1.0 / radius;
    let mut v = [a, 0.0, a, -a * centroid[0], -a * centroid[1]];
    let mut mu = 1.0;
    while mu > 1e-12 {
        for _ in 0..100 {
            let (g, hess) = newton(&v, mu);
            let Some(step) = hess.cholesky().map(|c| c.solve(&g)) else { break };
            let decrement = step.dot(&g);
            if decrement < 1e-18 {
                break;
            }
            let f0 = barrier(&v, mu);
            let mut t = 1.0;
            loop {
                let trial: [f64; 5] = std::array::from_fn(|i| v[i] - t * step[i]);
                if barrier(&trial, mu) <= f0 - 0.25 * t * decrement {
                    v = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    break;
                }
            }
        }
        mu *= 0.1;
    }
    PI / (v[0] * v[2] - v[1] * v[1])
}

/// Best profit over schedules with no simultaneous charge and discharge,
/// searching two hours' net injections on a `resolution` grid and solving the
/// remaining hour from the terminal condition. Every hour pair is tried, so
/// any LP vertex with two hours at a power bound or zero lies on the grid.
/// Assumes three hours and storage capacity that never binds.
pub fn grid_search_three_hours(spec: &StorageSpec, prices: &[f64; 3], resolution: f64) -> f64 {
    let eta = spec.efficiency;
    let p_max = spec.power_rating;
    let steps = (p_max / resolution).round() as i64;
    let delta_e = |x: f64| if x >= 0.0 { -x / eta } else { -eta * x };
    let allowed = |t: usize, x: f64| x.abs() <= p_max + 1e-12 && !(prices[t] < 0.0 && x > 1e-12);
    let mut best = f64::NEG_INFINITY;
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        for a in -steps..=steps {
            let xi = a as f64 * resolution;
            if !allowed(i, xi) {
                continue;
            }
            for b in -steps..=steps {
                let xj = b as f64 * resolution;
                if !allowed(j, xj) {
                    continue;
                }
                let need = -(delta_e(xi) + delta_e(xj));
                let xk = if need <= 0.0 { -need * eta } else { -need / eta };
                if !allowed(k, xk) {
                    continue;
                }
                let mut x = [0.0; 3];
                x[i] = xi;
                x[j] = xj;
                x[k] = xk;
                let mut e = spec.initial_soc;
                let mut ok = true;
                for xt in x {
                    e += delta_e(xt);
                    ok &= (-1e-9..=spec.energy_capacity + 1e-9).contains(&e);
                }
                if ok {
                    best = best.max((0..3).map(|t| prices[t] * x[t]).sum());
                }
            }
        }
    }
    best
}
