//! Interior-point backend.
//!
//! The program is handed to Clarabel as `min −cᵀx  s.t.  Ax + s = b, s ∈ K`
//! with one zero cone for the equalities and one `−x_block + s = 0` cone row
//! group per constrained variable block.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{validate, ConeBlock, ConicProgram, Solution, SolveStatus};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Backend tolerances tried in turn, as multiples of `tol`. The backend stops
/// on scaled residuals, so the first pass aims two orders tighter to land
/// absolute residuals inside `tol`. Near a cone apex that can stall; the
/// second pass retries at `tol` itself.
const INNER_TOL_FACTORS: [f64; 2] = [1e-2, 1.0];

pub fn solve(prog: &ConicProgram, tol: f64) -> Solution {
    let mut last = None;
    for factor in INNER_TOL_FACTORS {
        let sol = attempt(prog, tol * factor, tol);
        match sol.status {
            SolveStatus::NumericalFailure => last = Some(sol),
            _ => return sol,
        }
    }
    last.expect("at least one attempt")
}

fn attempt(prog: &ConicProgram, inner: f64, tol: f64) -> Solution {
    let n = prog.num_vars();
    let m_eq = prog.num_equalities();

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let a = prog.equalities();
    for j in 0..n {
        for i in 0..m_eq {
            let v = a[(i, j)];
            if v != 0.0 {
                rows.push(i);
                cols.push(j);
                vals.push(v);
            }
        }
    }
    let mut b: Vec<f64> = prog.rhs().iter().copied().collect();
    let mut cones = Vec::new();
    if m_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(m_eq));
    }
    let mut next_row = m_eq;
    for (block, range) in prog.block_ranges() {
        let cone = match block {
            ConeBlock::Free(_) => continue,
            ConeBlock::NonNegative(k) => SupportedConeT::NonnegativeConeT(k),
            ConeBlock::SecondOrder(k) => SupportedConeT::SecondOrderConeT(k),
        };
        for j in range {
            rows.push(next_row);
            cols.push(j);
            vals.push(-1.0);
            b.push(0.0);
            next_row += 1;
        }
        cones.push(cone);
    }
    let m = next_row;

    let p = CscMatrix::zeros((n, n));
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let q: Vec<f64> = prog.objective().iter().map(|c| -c).collect();

    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: inner,
        tol_gap_rel: inner,
        tol_feas: inner,
        max_threads: 1,
        max_iter: 200,
        ..DefaultSettings::default()
    };

    let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(e) => return failure(SolveStatus::NumericalFailure, 0, format!("setup: {e}")),
    };
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations;

    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return failure(SolveStatus::Infeasible, iterations, format!("{:?}", sol.status));
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return failure(SolveStatus::Unbounded, iterations, format!("{:?}", sol.status));
        }
        // Reduced-accuracy answers are accepted only if they pass the residual check.
        SolverStatus::AlmostSolved => SolveStatus::NumericalFailure,
        other => {
            return failure(
                SolveStatus::NumericalFailure,
                iterations,
                format!("{other:?} (primal res {:e}, dual res {:e})", sol.r_prim, sol.r_dual),
            );
        }
    };

    let x = sol.x.clone();
    let objective = prog.objective().iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    let candidate = Solution {
        status: SolveStatus::Optimal,
        primal: Some(x),
        objective_value: Some(objective),
        iterations,
        detail: None,
    };
    if status == SolveStatus::Optimal {
        return candidate;
    }
    let report = validate(prog, &candidate, tol);
    if report.flagged {
        failure(
            SolveStatus::NumericalFailure,
            iterations,
            format!("AlmostSolved with residuals {report:?}"),
        )
    } else {
        candidate
    }
}

fn failure(status: SolveStatus, iterations: u32, detail: String) -> Solution {
    Solution { status, primal: None, objective_value: None, iterations, detail: Some(detail) }
}
