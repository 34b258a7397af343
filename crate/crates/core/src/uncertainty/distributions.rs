use serde::{Deserialize, Serialize};

use super::{mean_day, require_days, sample_std};
use crate::error::{Error, Result};
use crate::market::{PriceDay, HOURS_PER_DAY};

/// Independent per-hour normals `λ_t ~ N(μ_t, σ_t²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Independent per-hour lognormals `λ_t ~ LN(μ_t, σ_t²)`, fitted on prices
/// clipped below at `clip_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalModel {
    pub log_mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub clip_floor: f64,
}

impl NormalModel {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }
}

impl LogNormalModel {
    pub fn horizon(&self) -> usize {
        self.log_mean.len()
    }

    /// Mean and variance of hour `t`'s price.
    pub fn moments(&self, t: usize) -> (f64, f64) {
        let (mu, s2) = (self.log_mean[t], self.log_std[t].powi(2));
        ((mu + s2 / 2.0).exp(), s2.exp_m1() * (2.0 * mu + s2).exp())
    }
}

pub fn fit_normal(days: &[PriceDay]) -> Result<NormalModel> {
    require_days(days, 2)?;
    let mean = mean_day(days);
    let std = (0..HOURS_PER_DAY)
        .map(|h| sample_std(days.iter().map(|d| d.prices[h]), mean[h], days.len()))
        .collect();
    Ok(NormalModel { mean, std })
}

pub fn fit_lognormal(days: &[PriceDay], clip_floor: f64) -> Result<LogNormalModel> {
    require_days(days, 2)?;
    if !(clip_floor > 0.0 && clip_floor.is_finite()) {
        return Err(Error::InvalidParameter(format!("lognormal clip floor {clip_floor} must be positive")));
    }
    let m = days.len();
    let logs = |h: usize| days.iter().map(move |d| d.prices[h].max(clip_floor).ln());
    let log_mean: Vec<f64> = (0..HOURS_PER_DAY).map(|h| logs(h).sum::<f64>() / m as f64).collect();
    let log_std = (0..HOURS_PER_DAY).map(|h| sample_std(logs(h), log_mean[h], m)).collect();
    Ok(LogNormalModel { log_mean, log_std, clip_floor })
}

/// Single lognormal matched to the first two moments of `Z = Σ x_t λ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedLogNormal {
    pub log_mean: f64,
    pub log_std: f64,
    /// `E[Z]`
    pub mean: f64,
    /// `Var[Z]`
    pub variance: f64,
}

impl MatchedLogNormal {
    /// Quantile of level `p` given `Φ⁻¹(p)`.
    pub fn quantile_at(&self, z: f64) -> f64 {
        (self.log_mean + self.log_std * z).exp()
    }
}

/// Fenton–Wilkinson: exact mean and variance of the weighted sum under hour
/// independence, then `σ′² = ln(1 + v/m²)`, `μ′ = ln m − σ′²/2`.
pub fn fw_moment_match(model: &LogNormalModel, weights: &[f64]) -> Result<MatchedLogNormal> {
    if weights.len() != model.horizon() {
        return Err(Error::LengthMismatch { expected: model.horizon(), got: weights.len() });
    }
    let (mut mean, mut variance) = (0.0, 0.0);
    for (t, &x) in weights.iter().enumerate() {
        let (m, v) = model.moments(t);
        mean += x * m;
        variance += x * x * v;
    }
    if !(mean > 0.0) {
        return Err(Error::NonPositiveMean(mean));
    }
    let s2 = (variance / (mean * mean)).ln_1p();
    Ok(MatchedLogNormal { log_mean: mean.ln() - s2 / 2.0, log_std: s2.sqrt(), mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::testutil::days_from_columns;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, LogNormal};

    #[test]
    fn lognormal_fit_on_exact_logs() {
        let e2 = 2f64.exp();
        let model = fit_lognormal(&days_from_columns(&[vec![1.0, e2]]), 0.01).unwrap();
        assert!((model.log_mean[0] - 1.0).abs() < 1e-12);
        assert!((model.log_std[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_samples() {
        let days = days_from_columns(&[vec![42.0, 42.0, 42.0]]);
        let n = fit_normal(&days).unwrap();
        assert_eq!((n.mean[0], n.std[0]), (42.0, 0.0));
        let ln = fit_lognormal(&days, 0.01).unwrap();
        assert!((ln.log_mean[0] - 42f64.ln()).abs() < 1e-12);
        assert_eq!(ln.log_std[0], 0.0);
    }

    #[test]
    fn negative_prices_are_clipped() {
        let days = days_from_columns(&[vec![-10.0, 0.01]]);
        let ln = fit_lognormal(&days, 0.01).unwrap();
        assert!((ln.log_mean[0] - 0.01f64.ln()).abs() < 1e-12);
        assert_eq!(ln.log_std[0], 0.0);
        assert!(fit_lognormal(&days, 0.0).is_err());
    }

    fn iid(mu: f64, sigma: f64, t: usize) -> LogNormalModel {
        LogNormalModel { log_mean: vec![mu; t], log_std: vec![sigma; t], clip_floor: 0.01 }
    }

    #[test]
    fn single_hour_is_identity() {
        let model = LogNormalModel { log_mean: vec![3.0, 0.0], log_std: vec![1.0, 0.5], clip_floor: 0.01 };
        let m = fw_moment_match(&model, &[0.0, 1.0]).unwrap();
        assert!(m.log_mean.abs() < 1e-12);
        assert!((m.log_std - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_iid_hours() {
        let m = fw_moment_match(&iid(0.0, 0.25, 2), &[1.0, 1.0]).unwrap();
        assert!((m.log_mean - 0.7085).abs() < 1e-3, "{m:?}");
        assert!((m.log_std - 0.1782).abs() < 1e-3, "{m:?}");
    }

    #[test]
    fn two_iid_hours_monte_carlo() {
        let m = fw_moment_match(&iid(0.0, 0.25, 2), &[1.0, 1.0]).unwrap();
        let dist = LogNormal::new(0.0, 0.25).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = dist.sample(&mut rng) + dist.sample(&mut rng);
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let s2_hat = (var / (mean * mean)).ln_1p();
        let mu_hat = mean.ln() - s2_hat / 2.0;
        assert!((mu_hat - m.log_mean).abs() < 1e-2);
        assert!((s2_hat.sqrt() - m.log_std).abs() < 1e-2);
    }

    #[test]
    fn cancelling_weights_have_no_match() {
        let err = fw_moment_match(&iid(0.0, 0.25, 2), &[1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveMean(m) if m.abs() < 1e-15));
        assert!(fw_moment_match(&iid(0.0, 0.25, 2), &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn matched_lognormal_keeps_both_moments(
            mus in prop::collection::vec(-1.0f64..4.0, 3),
            sigmas in prop::collection::vec(0.0f64..1.0, 3),
            xs in prop::collection::vec(0.01f64..3.0, 3),
        ) {
            let model = LogNormalModel { log_mean: mus, log_std: sigmas, clip_floor: 0.01 };
            let m = fw_moment_match(&model, &xs).unwrap();
            let s2 = m.log_std * m.log_std;
            let mean = (m.log_mean + s2 / 2.0).exp();
            let var = s2.exp_m1() * (2.0 * m.log_mean + s2).exp();
            prop_assert!((mean - m.mean).abs() <= 1e-10 * m.mean.max(1.0));
            prop_assert!((var - m.variance).abs() <= 1e-10 * m.variance.max(1.0));
        }
    }
}
