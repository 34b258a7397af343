use nalgebra::DVector;

use crate::conic::{self, ProgramBuilder};
use crate::error::{Error, Result};
use crate::uncertainty::{EllipsoidalSet, PolyhedralSet, UncertaintyModel};

/// Minimizing price vector and the profit it yields.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub prices: Vec<f64>,
    pub value: f64,
}

/// `min λᵀx` over a polyhedral or ellipsoidal set.
pub fn inner_worst_case(x: &[f64], model: &UncertaintyModel, tol: f64) -> Result<WorstCase> {
    match model {
        UncertaintyModel::Polyhedral(set) => polyhedral(x, set, tol),
        UncertaintyModel::Ellipsoidal(set) => Ok(ellipsoidal(x, set)),
        other => Err(Error::NotASet(other.kind())),
    }
}

fn check(x: &[f64], horizon: usize) -> Result<()> {
    if x.len() != horizon {
        return Err(Error::LengthMismatch { expected: horizon, got: x.len() });
    }
    Ok(())
}

/// Inner LP `max −xᵀλ` s.t. `Dλ + s = d`, `s ≥ 0`.
fn polyhedral(x: &[f64], set: &PolyhedralSet, tol: f64) -> Result<WorstCase> {
    check(x, set.horizon())?;
    if x.iter().all(|&v| v == 0.0) {
        return Ok(WorstCase { prices: set.center.clone(), value: 0.0 });
    }
    let mut b = ProgramBuilder::new();
    let lambda = b.free("lambda", set.horizon());
    let slack = b.nonnegative("s", set.num_rows());
    for (i, row) in set.constraint_matrix.row_iter().enumerate() {
        let mut terms: Vec<(usize, f64)> =
            row.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(t, &a)| (lambda.at(t), a)).collect();
        terms.push((slack.at(i), 1.0));
        b.equality(terms, set.constraint_rhs[i]);
    }
    for (t, &xt) in x.iter().enumerate() {
        b.maximize(lambda.at(t), -xt);
    }
    let prog = b.build();
    let (primal, _) = conic::solve(&prog, tol).into_optimal()?;
    let prices = lambda.slice(&primal).to_vec();
    let value = prices.iter().zip(x).map(|(l, v)| l * v).sum();
    Ok(WorstCase { prices, value })
}

/// `λ* = λ̄ − QQᵀx/‖Qᵀx‖`, value `λ̄ᵀx − ‖Qᵀx‖`.
fn ellipsoidal(x: &[f64], set: &EllipsoidalSet) -> WorstCase {
    let xv = DVector::from_column_slice(x);
    let center = DVector::from_column_slice(&set.center);
    let qx = set.shape.tr_mul(&xv);
    let norm = qx.norm();
    let nominal = center.dot(&xv);
    if norm == 0.0 {
        return WorstCase { prices: set.center.clone(), value: nominal };
    }
    let prices = center - &set.shape * qx / norm;
    WorstCase { prices: prices.iter().copied().collect(), value: nominal - norm }
}
