//! Chance-lognormal by fixed-point iteration on the quantile multiplier.
//!
//! For a fixed multiplier `κ` the constraint `m̄ᵀx − κ·‖diag(√v)x‖ ≥ γ`
//! (per-hour lognormal means `m̄` and variances `v`) is an ordinary SOC
//! program. At its solution `x` the weighted sum `Z = xᵀλ` is matched to a
//! single lognormal, its `(1 − conf)` quantile `q` is read off, and `κ` is
//! reset to the multiplier that would have produced `q` exactly:
//! `κ = (E[Z] − q) / √Var[Z]`.

use nalgebra::{DMatrix, DVector};

use super::{check_confidence, check_len, soc_program};
use crate::error::{Error, Result};
use crate::normal;
use crate::storage::{FeasibleSet, Schedule};
use crate::uncertainty::{fw_moment_match, LogNormalModel};

pub const LOGNORMAL_MAX_ITER: usize = 20;
pub const KAPPA_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct LogNormalOutcome {
    pub schedule: Schedule,
    /// Matched-lognormal quantile at the final schedule, or the SOC bound when
    /// no lognormal match exists there.
    pub worst_case: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn solve_chance_lognormal(
    fs: &FeasibleSet,
    model: &LogNormalModel,
    conf: f64,
    max_iter: usize,
    kappa_tol: f64,
    tol: f64,
) -> Result<LogNormalOutcome> {
    check_confidence(conf)?;
    check_len(fs, model.horizon())?;
    if max_iter == 0 {
        return Err(Error::InvalidParameter("lognormal iteration needs at least one step".into()));
    }
    let t_len = model.horizon();
    let (means, sds): (Vec<f64>, Vec<f64>) = (0..t_len)
        .map(|t| {
            let (m, v) = model.moments(t);
            (m, v.sqrt())
        })
        .unzip();
    let upper = normal::quantile(conf);
    let lower = normal::quantile(1.0 - conf);

    let mut kappa = upper;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let shape = DMatrix::from_diagonal(&DVector::from_iterator(t_len, sds.iter().map(|s| kappa * s)));
        let sol = soc_program(fs, &means, &shape)?.solve(tol)?;
        let x = sol.schedule.net_injection();

        let (next, worst_case) = match fw_moment_match(model, &x) {
            Ok(m) if m.variance > 0.0 => {
                let q = m.quantile_at(lower);
                (((m.mean - q) / m.variance.sqrt()).max(0.0), q)
            }
            Ok(m) => (kappa, m.mean),
            Err(Error::NonPositiveMean(_)) => (upper, sol.worst_case),
            Err(e) => return Err(e),
        };
        let converged = (next - kappa).abs() < kappa_tol;
        if converged || iterations >= max_iter {
            return Ok(LogNormalOutcome { schedule: sol.schedule, worst_case, kappa, iterations, converged });
        }
        kappa = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::DEFAULT_TOL;
    use crate::robust::ArbitrageProgram;
    use crate::storage::{build_feasible_set, StorageSpec, TerminalSoc};
    use rand::SeedableRng;
    use rand_distr::{Distribution, LogNormal};

    /// One hour, one MWh to sell and no room to charge.
    fn sell_one() -> FeasibleSet {
        let spec = StorageSpec::new(1.0, 1.0, 1.0, 1.0, TerminalSoc::Free).unwrap();
        build_feasible_set(&spec, &[1.0]).unwrap()
    }

    #[test]
    fn single_hour_matches_exact_quantile() {
        let model = LogNormalModel { log_mean: vec![0.0], log_std: vec![0.5], clip_floor: 0.01 };
        let out = solve_chance_lognormal(&sell_one(), &model, 0.9, LOGNORMAL_MAX_ITER, KAPPA_TOL, DEFAULT_TOL)
            .unwrap();
        assert!(out.converged);
        assert!((out.schedule.discharge[0] - 1.0).abs() < 1e-6);
        let exact = (0.5 * normal::quantile(0.1)).exp();
        assert!((out.worst_case - exact).abs() < 1e-2, "{} vs {exact}", out.worst_case);
        assert!((out.worst_case - 0.527).abs() < 1e-2);

        // Empirical 10 % quantile of LN(0, 0.5²).
        let dist = LogNormal::new(0.0, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut draws: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        assert!((draws[100_000] - out.worst_case).abs() < 1e-2);
    }

    #[test]
    fn deterministic_lognormal_is_the_lp_at_exp_mu() {
        let spec = StorageSpec::new(1.0, 10.0, 0.9, 5.0, TerminalSoc::EqualInitial).unwrap();
        let mu = [10f64.ln(), 50f64.ln()];
        let fs = build_feasible_set(&spec, &[10.0, 50.0]).unwrap();
        let model = LogNormalModel { log_mean: mu.to_vec(), log_std: vec![0.0, 0.0], clip_floor: 0.01 };
        let out = solve_chance_lognormal(&fs, &model, 0.95, LOGNORMAL_MAX_ITER, KAPPA_TOL, DEFAULT_TOL).unwrap();
        let lp = ArbitrageProgram::nominal(&fs, &[10.0, 50.0]).unwrap().solve(DEFAULT_TOL).unwrap();
        assert!((out.worst_case - lp.worst_case).abs() < 1e-6, "{}", out.worst_case);
    }

    #[test]
    fn median_level_stays_below_mean_profit() {
        let spec = StorageSpec::new(1.0, 10.0, 0.9, 5.0, TerminalSoc::EqualInitial).unwrap();
        let fs = build_feasible_set(&spec, &[10.0, 50.0]).unwrap();
        let model = LogNormalModel { log_mean: vec![2.3, 3.9], log_std: vec![0.3, 0.4], clip_floor: 0.01 };
        let out = solve_chance_lognormal(&fs, &model, 0.5, LOGNORMAL_MAX_ITER, KAPPA_TOL, DEFAULT_TOL).unwrap();
        let x = out.schedule.net_injection();
        let mean_profit: f64 = (0..2).map(|t| model.moments(t).0 * x[t]).sum();
        assert!(out.worst_case <= mean_profit + 1e-9);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let model = LogNormalModel { log_mean: vec![0.0], log_std: vec![0.5], clip_floor: 0.01 };
        let out = solve_chance_lognormal(&sell_one(), &model, 0.9, 1, 1e-12, DEFAULT_TOL).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
        assert!(solve_chance_lognormal(&sell_one(), &model, 0.3, 5, KAPPA_TOL, DEFAULT_TOL).is_err());
    }
}
