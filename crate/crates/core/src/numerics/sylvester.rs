use nalgebra::DMatrix;

use super::linalg::{check_finite, check_square, norm_1, solve_linear};
use super::spectrum::{eigenvalues, modulus};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative eigenvalue separation below which `A X + X B = C` is refused.
const MIN_SEPARATION: f64 = 1e-10;

/// Solves `A X + X B = C` through the Kronecker linearisation
/// `(I ⊗ A + Bᵀ ⊗ I) vec X = vec C`.
///
/// Meant for the small systems that occur here (side length up to a few
/// dozen).
pub fn solve_sylvester<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    check_square(a)?;
    check_square(b)?;
    check_finite(c, "right-hand side")?;
    let (m, n) = (a.nrows(), b.nrows());
    if c.nrows() != m || c.ncols() != n {
        return Err(Error::Dimension(format!(
            "C is {}x{}, expected {}x{}",
            c.nrows(),
            c.ncols(),
            m,
            n
        )));
    }
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    let scale = (norm_1(a) + norm_1(b)).approx().max(1.0);
    let mut sep = f64::INFINITY;
    for x in &ea {
        for y in &eb {
            sep = sep.min(modulus(&(x + y)).approx() / scale);
        }
    }
    if sep < MIN_SEPARATION {
        return Err(Error::SharedEigenvalue { separation: sep });
    }
    let im = DMatrix::<T>::identity(m, m);
    let in_ = DMatrix::<T>::identity(n, n);
    let big = in_.kronecker(a) + b.transpose().kronecker(&im);
    let rhs = DMatrix::from_column_slice(m * n, 1, c.as_slice());
    let v = solve_linear(&big, &rhs)?;
    Ok(DMatrix::from_column_slice(m, n, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn negative_identity() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = solve_sylvester(&a, &a, &c).unwrap();
        assert!((x + &c * 0.5).amax() < 1e-15);
    }

    #[test]
    fn diagonal_case() {
        let a = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let c = DMatrix::from_element(2, 2, 1.0);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                let want: f64 = 1.0 / (a[(k, k)] + b[(l, l)]);
                assert!((x[(k, l)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shared_eigenvalue_is_refused() {
        let a = DMatrix::from_row_slice(1, 1, &[2.0]);
        let b = DMatrix::from_row_slice(1, 1, &[-2.0]);
        let c = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(solve_sylvester(&a, &b, &c), Err(Error::SharedEigenvalue { .. })));
    }

    #[test]
    fn random_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = DMatrix::<f64>::from_fn(3, 3, |i, j| {
                rng.random_range(-0.5..0.5) - if i == j { 2.0 } else { 0.0 }
            });
            let b = DMatrix::<f64>::from_fn(4, 4, |i, j| {
                rng.random_range(-0.5..0.5) - if i == j { 1.5 } else { 0.0 }
            });
            let c = DMatrix::<f64>::from_fn(3, 4, |_, _| rng.random_range(-3.0..3.0));
            let x = solve_sylvester(&a, &b, &c).unwrap();
            let res = (&a * &x + &x * &b - &c).norm();
            assert!(res <= 1e-10 * c.norm());
        }
    }
}
