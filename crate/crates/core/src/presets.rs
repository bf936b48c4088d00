//! Parameter sets used in examples, tests and benchmarks.

use crate::error::Result;
use crate::model::{HawkesModel, MarkLaw};
use crate::scalar::Scalar;

fn q<T: Scalar>(n: u64, d: u64) -> T {
    T::count(n) / T::count(d)
}

fn exp_grid<T: Scalar>(means: Vec<Vec<T>>) -> Vec<Vec<MarkLaw<T>>> {
    means.into_iter().map(|r| r.into_iter().map(MarkLaw::exponential).collect()).collect()
}

/// Bivariate model with exponential marks, `ρ(H) ≈ 0.82`.
pub fn bivariate<T: Scalar>() -> HawkesModel<T> {
    HawkesModel::new(
        vec![q(1, 2), q(1, 2)],
        vec![q(3, 1), q(2, 1)],
        vec![q(1, 1), q(2, 1)],
        exp_grid(vec![vec![q(3, 2), q(1, 2)], vec![q(3, 4), q(5, 4)]]),
    )
    .expect("preset is stable")
}

/// Trivariate model with exponential marks.
pub fn trivariate<T: Scalar>() -> HawkesModel<T> {
    HawkesModel::new(
        vec![q(3, 10), q(1, 1), q(1, 2)],
        vec![q(2, 1), q(3, 2), q(5, 2)],
        vec![q(3, 2), q(1, 2), q(1, 1)],
        exp_grid(vec![
            vec![q(1, 2), q(3, 10), q(2, 5)],
            vec![q(7, 10), q(1, 2), q(1, 2)],
            vec![q(2, 5), q(1, 5), q(1, 2)],
        ]),
    )
    .expect("preset is stable")
}

/// Model without excitation: independent Poisson arrivals into M/M/∞ queues.
pub fn poisson<T: Scalar>(lambda_bar: Vec<T>, alpha: Vec<T>, mu: Vec<T>) -> Result<HawkesModel<T>> {
    let d = lambda_bar.len();
    HawkesModel::new(lambda_bar, alpha, mu, vec![vec![MarkLaw::Zero; d]; d])
}
