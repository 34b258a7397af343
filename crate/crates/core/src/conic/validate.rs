use super::{ConeBlock, ConicProgram, Solution};

/// Residuals of a claimed optimal point, recomputed from the program data alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_equality_residual: f64,
    pub max_cone_violation: f64,
    /// `|cᵀx − reported objective| / (1 + |reported objective|)`.
    pub objective_gap: f64,
    pub threshold: f64,
    pub flagged: bool,
}

/// Checks a solution against `prog`. Anything above `10·tol` is flagged; a
/// solution without a primal point is flagged outright.
pub fn validate(prog: &ConicProgram, sol: &Solution, tol: f64) -> ResidualReport {
    let threshold = 10.0 * tol;
    let Some(x) = sol.primal.as_deref().filter(|x| x.len() == prog.num_vars()) else {
        return ResidualReport {
            max_equality_residual: f64::INFINITY,
            max_cone_violation: f64::INFINITY,
            objective_gap: f64::INFINITY,
            threshold,
            flagged: true,
        };
    };

    let max_equality_residual = prog
        .equalities()
        .row_iter()
        .zip(prog.rhs().iter())
        .map(|(row, b)| {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            (lhs - b).abs()
        })
        .fold(0.0, f64::max);

    let mut max_cone_violation: f64 = 0.0;
    for (block, range) in prog.block_ranges() {
        let v = &x[range];
        let violation = match block {
            ConeBlock::Free(_) => 0.0,
            ConeBlock::NonNegative(_) => v.iter().map(|&xi| (-xi).max(0.0)).fold(0.0, f64::max),
            ConeBlock::SecondOrder(_) => {
                let norm = v[1..].iter().map(|w| w * w).sum::<f64>().sqrt();
                (norm - v[0]).max(0.0)
            }
        };
        max_cone_violation = max_cone_violation.max(violation);
    }

    let recomputed: f64 = prog.objective().iter().zip(x).map(|(c, v)| c * v).sum();
    let objective_gap = match sol.objective_value {
        Some(obj) => (recomputed - obj).abs() / (1.0 + obj.abs()),
        None => f64::INFINITY,
    };

    let flagged = max_equality_residual > threshold
        || max_cone_violation > threshold
        || objective_gap > threshold
        || !(max_equality_residual.is_finite() && max_cone_violation.is_finite());
    ResidualReport { max_equality_residual, max_cone_violation, objective_gap, threshold, flagged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ProgramBuilder, SolveStatus};

    fn tiny() -> ConicProgram {
        let mut b = ProgramBuilder::new();
        let x = b.nonnegative("x", 1);
        let s = b.nonnegative("s", 1);
        b.equality([(x.at(0), 1.0), (s.at(0), 1.0)], 1.0);
        b.maximize(x.at(0), 1.0);
        b.build()
    }

    fn claimed(x: Vec<f64>, obj: f64) -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            primal: Some(x),
            objective_value: Some(obj),
            iterations: 0,
            detail: None,
        }
    }

    #[test]
    fn exact_point_has_zero_residuals() {
        let r = validate(&tiny(), &claimed(vec![1.0, 0.0], 1.0), 1e-8);
        assert_eq!(r.max_equality_residual, 0.0);
        assert_eq!(r.max_cone_violation, 0.0);
        assert_eq!(r.objective_gap, 0.0);
        assert!(!r.flagged);
    }

    #[test]
    fn perturbed_equality_is_flagged() {
        let r = validate(&tiny(), &claimed(vec![1.0 + 1e-3, 0.0], 1.0 + 1e-3), 1e-8);
        assert!(r.flagged);
        assert!((r.max_equality_residual - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn negative_orthant_entry_is_flagged() {
        let r = validate(&tiny(), &claimed(vec![1.5, -0.5], 1.5), 1e-8);
        assert_eq!(r.max_equality_residual, 0.0);
        assert!((r.max_cone_violation - 0.5).abs() < 1e-15);
        assert!(r.flagged);
    }

    #[test]
    fn missing_primal_is_flagged() {
        let sol = Solution {
            status: SolveStatus::Infeasible,
            primal: None,
            objective_value: None,
            iterations: 3,
            detail: None,
        };
        assert!(validate(&tiny(), &sol, 1e-8).flagged);
    }
}
