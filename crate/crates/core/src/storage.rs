//! The storage asset and its price-taker arbitrage LP.
//!
//! With hour-long periods normalized away (energy and power are numerically
//! equal), the feasible set over a horizon of `T` hours is
//!
//! ```text
//! 0 ≤ p_t, b_t ≤ P                       power rating
//! p_t = 0            if λ̂_t < 0          no discharge at negative nominal prices
//! e_t − e_{t−1} = −p_t/η + η·b_t          state of charge, e_{−1} = e₀
//! 0 ≤ e_t ≤ E                            capacity
//! e_{T−1} = e₀                           (EqualInitial terminal policy only)
//! ```
//!
//! and the deterministic problem maximizes `Σ λ_t (p_t − b_t)` over it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conic::{ProgramBuilder, VarRange};
use crate::error::{Error, Result};
use crate::robust::ArbitrageProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalSoc {
    EqualInitial,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageSpec {
    /// MW.
    pub power_rating: f64,
    /// MWh.
    pub energy_capacity: f64,
    /// One-way charge and discharge efficiency.
    pub efficiency: f64,
    /// MWh.
    pub initial_soc: f64,
    pub terminal_soc: TerminalSoc,
}

impl Default for StorageSpec {
    /// 2.5 MW / 10 MWh, 90 % one-way efficiency, starting and ending half full.
    fn default() -> Self {
        Self {
            power_rating: 2.5,
            energy_capacity: 10.0,
            efficiency: 0.9,
            initial_soc: 5.0,
            terminal_soc: TerminalSoc::EqualInitial,
        }
    }
}

impl StorageSpec {
    pub fn new(
        power_rating: f64,
        energy_capacity: f64,
        efficiency: f64,
        initial_soc: f64,
        terminal_soc: TerminalSoc,
    ) -> Result<Self> {
        let spec = Self { power_rating, energy_capacity, efficiency, initial_soc, terminal_soc };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if !(self.power_rating > 0.0 && self.power_rating.is_finite()) {
            return fail(format!("power rating {} must be positive", self.power_rating));
        }
        if !(self.energy_capacity > 0.0 && self.energy_capacity.is_finite()) {
            return fail(format!("energy capacity {} must be positive", self.energy_capacity));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return fail(format!("efficiency {} must lie in (0, 1]", self.efficiency));
        }
        if !(0.0..=self.energy_capacity).contains(&self.initial_soc) {
            return fail(format!(
                "initial state of charge {} outside [0, {}]",
                self.initial_soc, self.energy_capacity
            ));
        }
        Ok(())
    }
}

/// Dispatch over a horizon: discharge `p`, charge `b` (MW) and end-of-hour state of charge `e` (MWh).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub discharge: Vec<f64>,
    pub charge: Vec<f64>,
    pub soc: Vec<f64>,
}

impl Schedule {
    /// Idle schedule holding the initial state of charge.
    pub fn idle(spec: &StorageSpec, horizon: usize) -> Self {
        Self {
            discharge: vec![0.0; horizon],
            charge: vec![0.0; horizon],
            soc: vec![spec.initial_soc; horizon],
        }
    }

    /// Builds a schedule from `p` and `b`, integrating the state of charge.
    pub fn from_dispatch(spec: &StorageSpec, discharge: Vec<f64>, charge: Vec<f64>) -> Result<Self> {
        if discharge.len() != charge.len() {
            return Err(Error::LengthMismatch { expected: discharge.len(), got: charge.len() });
        }
        let mut e = spec.initial_soc;
        let soc = discharge
            .iter()
            .zip(&charge)
            .map(|(p, b)| {
                e += -p / spec.efficiency + b * spec.efficiency;
                e
            })
            .collect();
        Ok(Self { discharge, charge, soc })
    }

    pub fn horizon(&self) -> usize {
        self.discharge.len()
    }

    /// `p_t − b_t`, the net injection each hour.
    pub fn net_injection(&self) -> Vec<f64> {
        self.discharge.iter().zip(&self.charge).map(|(p, b)| p - b).collect()
    }

    /// Largest violation of the storage constraints (bounds, dynamics, terminal policy).
    pub fn max_violation(&self, spec: &StorageSpec) -> f64 {
        let mut worst: f64 = 0.0;
        let mut prev = spec.initial_soc;
        for t in 0..self.horizon() {
            let (p, b, e) = (self.discharge[t], self.charge[t], self.soc[t]);
            for v in [-p, p - spec.power_rating, -b, b - spec.power_rating, -e, e - spec.energy_capacity] {
                worst = worst.max(v);
            }
            let dynamics = e - prev + p / spec.efficiency - b * spec.efficiency;
            worst = worst.max(dynamics.abs());
            prev = e;
        }
        if spec.terminal_soc == TerminalSoc::EqualInitial && self.horizon() > 0 {
            worst = worst.max((prev - spec.initial_soc).abs());
        }
        worst
    }

    /// CSV with columns `hour,p,b,e`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hour", "p", "b", "e"])?;
        for t in 0..self.horizon() {
            w.write_record([
                t.to_string(),
                self.discharge[t].to_string(),
                self.charge[t].to_string(),
                self.soc[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One linear equality over the `3T` schedule variables, indexed locally as
/// `p: 0..T`, `b: T..2T`, `e: 2T..3T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    spec: StorageSpec,
    horizon: usize,
    forced_zero: Vec<usize>,
    soc_rows: Vec<LinearRow>,
    terminal_row: Option<LinearRow>,
}

/// Where the schedule variables landed inside a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleVars {
    pub discharge: VarRange,
    pub charge: VarRange,
    pub soc: VarRange,
}

impl ScheduleVars {
    /// `(p_t, +1), (b_t, −1)` scaled by `coef`.
    pub fn net_terms(&self, t: usize, coef: f64) -> [(usize, f64); 2] {
        [(self.discharge.at(t), coef), (self.charge.at(t), -coef)]
    }

    pub fn extract(&self, primal: &[f64]) -> Schedule {
        Schedule {
            discharge: self.discharge.slice(primal).to_vec(),
            charge: self.charge.slice(primal).to_vec(),
            soc: self.soc.slice(primal).to_vec(),
        }
    }
}

/// Feasible set for `nominal_prices.len()` hours; discharge is pinned to zero
/// wherever the nominal price is negative.
pub fn build_feasible_set(spec: &StorageSpec, nominal_prices: &[f64]) -> Result<FeasibleSet> {
    spec.validate()?;
    let horizon = nominal_prices.len();
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least one hour".into()));
    }
    let (p, b, e) = (0, horizon, 2 * horizon);
    let forced_zero = nominal_prices.iter().enumerate().filter(|(_, &l)| l < 0.0).map(|(t, _)| t).collect();
    let soc_rows = (0..horizon)
        .map(|t| {
            let mut coeffs = vec![(e + t, 1.0), (p + t, 1.0 / spec.efficiency), (b + t, -spec.efficiency)];
            let rhs = if t == 0 {
                spec.initial_soc
            } else {
                coeffs.push((e + t - 1, -1.0));
                0.0
            };
            LinearRow { coeffs, rhs }
        })
        .collect();
    let terminal_row = (spec.terminal_soc == TerminalSoc::EqualInitial)
        .then(|| LinearRow { coeffs: vec![(e + horizon - 1, 1.0)], rhs: spec.initial_soc });
    Ok(FeasibleSet { spec: spec.clone(), horizon, forced_zero, soc_rows, terminal_row })
}

impl FeasibleSet {
    pub fn spec(&self) -> &StorageSpec {
        &self.spec
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Decision variables `p, b, e`: `3T`.
    pub fn num_variables(&self) -> usize {
        3 * self.horizon
    }

    pub fn forced_zero(&self) -> &[usize] {
        &self.forced_zero
    }

    pub fn soc_equalities(&self) -> &[LinearRow] {
        &self.soc_rows
    }

    pub fn terminal_equality(&self) -> Option<&LinearRow> {
        self.terminal_row.as_ref()
    }

    /// Adds the schedule variables and every storage constraint to `builder`.
    /// Upper bounds are lowered to `x + s = ub` with nonnegative slacks.
    pub fn install(&self, builder: &mut ProgramBuilder) -> ScheduleVars {
        let t = self.horizon;
        let discharge = builder.nonnegative("p", t);
        let charge = builder.nonnegative("b", t);
        let soc = builder.nonnegative("e", t);
        debug_assert_eq!((charge.start, soc.start), (discharge.start + t, discharge.start + 2 * t));
        let base = discharge.start;

        let bounds = [
            (discharge, self.spec.power_rating, "p_slack"),
            (charge, self.spec.power_rating, "b_slack"),
            (soc, self.spec.energy_capacity, "e_slack"),
        ];
        for (vars, upper, name) in bounds {
            let slack = builder.nonnegative(name, t);
            for i in 0..t {
                builder.equality([(vars.at(i), 1.0), (slack.at(i), 1.0)], upper);
            }
        }
        for row in self.soc_rows.iter().chain(&self.terminal_row) {
            builder.equality(row.coeffs.iter().map(|&(j, c)| (base + j, c)), row.rhs);
        }
        for &i in &self.forced_zero {
            builder.equality([(discharge.at(i), 1.0)], 0.0);
        }
        ScheduleVars { discharge, charge, soc }
    }
}

/// Optimal schedule and profit when `prices` are known in advance.
pub fn solve_perfect_foresight(spec: &StorageSpec, prices: &[f64], tol: f64) -> Result<(Schedule, f64)> {
    let fs = build_feasible_set(spec, prices)?;
    let sol = ArbitrageProgram::nominal(&fs, prices)?.solve(tol)?;
    Ok((sol.schedule, sol.worst_case))
}

/// `Σ λ_t (p_t − b_t)` for a fixed schedule; no feasibility re-check.
pub fn realized_profit(schedule: &Schedule, actual_prices: &[f64]) -> Result<f64> {
    if actual_prices.len() != schedule.horizon() {
        return Err(Error::LengthMismatch { expected: schedule.horizon(), got: actual_prices.len() });
    }
    Ok(schedule
        .discharge
        .iter()
        .zip(&schedule.charge)
        .zip(actual_prices)
        .map(|((p, b), l)| l * (p - b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::DEFAULT_TOL;

    fn small() -> StorageSpec {
        StorageSpec::new(1.0, 10.0, 0.9, 5.0, TerminalSoc::EqualInitial).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(StorageSpec::new(0.0, 10.0, 0.9, 5.0, TerminalSoc::Free).is_err());
        assert!(StorageSpec::new(1.0, -1.0, 0.9, 0.0, TerminalSoc::Free).is_err());
        assert!(StorageSpec::new(1.0, 10.0, 1.1, 5.0, TerminalSoc::Free).is_err());
        assert!(StorageSpec::new(1.0, 10.0, 0.0, 5.0, TerminalSoc::Free).is_err());
        assert!(StorageSpec::new(1.0, 10.0, 0.9, 10.5, TerminalSoc::Free).is_err());
        assert!(StorageSpec::new(1.0, 10.0, 1.0, 10.0, TerminalSoc::Free).is_ok());
        StorageSpec::default().validate().unwrap();
    }

    #[test]
    fn forced_zero_follows_negative_prices() {
        assert!(build_feasible_set(&small(), &[10.0, 50.0]).unwrap().forced_zero().is_empty());
        assert_eq!(build_feasible_set(&small(), &[-5.0, 50.0]).unwrap().forced_zero(), &[0]);
        assert!(build_feasible_set(&small(), &[]).is_err());
    }

    #[test]
    fn day_ahead_set_has_expected_shape() {
        let fs = build_feasible_set(&StorageSpec::default(), &[30.0; 24]).unwrap();
        assert_eq!(fs.num_variables(), 72);
        assert_eq!(fs.soc_equalities().len(), 24);
        assert!(fs.terminal_equality().is_some());

        let free = StorageSpec { terminal_soc: TerminalSoc::Free, ..StorageSpec::default() };
        assert!(build_feasible_set(&free, &[30.0; 24]).unwrap().terminal_equality().is_none());
    }

    #[test]
    fn two_hour_spread() {
        let (s, profit) = solve_perfect_foresight(&small(), &[10.0, 50.0], DEFAULT_TOL).unwrap();
        assert!((profit - 30.5).abs() < 1e-6, "{profit}");
        assert!((s.charge[0] - 1.0).abs() < 1e-6);
        assert!((s.discharge[1] - 0.81).abs() < 1e-6);
        assert!(s.max_violation(&small()) < 1e-6);
    }

    #[test]
    fn negative_first_hour_pays_to_charge() {
        let (s, profit) = solve_perfect_foresight(&small(), &[-5.0, 50.0], DEFAULT_TOL).unwrap();
        assert!((profit - 45.5).abs() < 1e-6, "{profit}");
        assert!(s.discharge[0].abs() < 1e-9);
    }

    #[test]
    fn flat_prices_are_not_worth_cycling() {
        let (s, profit) = solve_perfect_foresight(&StorageSpec::default(), &[40.0; 24], DEFAULT_TOL).unwrap();
        assert!(profit.abs() < 1e-6, "{profit} {s:?}");
        assert!(s.net_injection().iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn realized_profit_examples() {
        let spec = small();
        let idle = Schedule::idle(&spec, 2);
        assert_eq!(realized_profit(&idle, &[3.0, -7.0]).unwrap(), 0.0);
        let s = Schedule::from_dispatch(&spec, vec![0.0, 0.81], vec![1.0, 0.0]).unwrap();
        assert!(s.max_violation(&spec) < 1e-12);
        assert!((realized_profit(&s, &[10.0, 50.0]).unwrap() - 30.5).abs() < 1e-12);
        assert!((realized_profit(&s, &[10.0, 0.0]).unwrap() + 10.0).abs() < 1e-12);
        assert!(matches!(realized_profit(&s, &[1.0]), Err(Error::LengthMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn schedule_csv_has_one_row_per_hour() {
        let s = Schedule::from_dispatch(&small(), vec![0.0, 0.81], vec![1.0, 0.0]).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "hour,p,b,e");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,1,5.9"));
    }
}
