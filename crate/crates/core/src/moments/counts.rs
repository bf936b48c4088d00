use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::model::HawkesModel;
use crate::numerics::{mat_exp, solve_linear};
use crate::scalar::Real;

/// `E[N(t)]`, the expected number of arrivals per component up to `t`.
///
/// With `A = E[B] - D_α` and `c = α ⊙ λ̄`:
/// `A⁻¹(e^{tA} - I)λ̄ + A⁻²(e^{tA} - I)c - t A⁻¹ c`.
pub fn hawkes_count_moments<T: Real>(m: &HawkesModel<T>, t: T) -> Result<Vec<T>> {
    let d = m.d();
    if t.is_zero() {
        return Ok(vec![T::zero(); d]);
    }
    let a = m.mean_matrix() - DMatrix::from_diagonal(&DVector::from_column_slice(m.alpha()));
    let lb = DVector::from_column_slice(m.lambda_bar());
    let c = DVector::from_fn(d, |i, _| m.alpha()[i] * m.lambda_bar()[i]);
    let em = mat_exp(&a, t)? - DMatrix::identity(d, d);
    let mut rhs = DMatrix::zeros(d, 3);
    rhs.set_column(0, &(&em * &lb));
    rhs.set_column(1, &(&em * &c));
    rhs.set_column(2, &c);
    let s = solve_linear(&a, &rhs)?;
    let s2 = solve_linear(&a, &DMatrix::from_column_slice(d, 1, s.column(1).as_slice()))?;
    let out = s.column(0) + s2.column(0) - s.column(2) * t;
    Ok(out.iter().copied().collect())
}
