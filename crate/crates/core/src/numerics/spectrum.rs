use nalgebra::{Complex, DMatrix};

use super::linalg::{check_finite, check_square};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues from the real Schur form; complex pairs included.
pub fn eigenvalues<T: Real>(a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    check_square(a)?;
    check_finite(a, "matrix")?;
    let n = a.nrows();
    let upper = (0..n).all(|j| (j + 1..n).all(|i| a[(i, j)].is_zero()));
    let lower = (0..n).all(|j| (0..j).all(|i| a[(i, j)].is_zero()));
    if upper || lower {
        return Ok((0..n).map(|i| Complex::new(a[(i, i)], T::zero())).collect());
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), T::default_epsilon(), 100_000)
        .ok_or(Error::NoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().cloned().collect())
}

pub(crate) fn modulus<T: Real>(z: &Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Real>(a: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|z| modulus(&z))
        .fold(T::zero(), |m, x| if x > m { x } else { m }))
}
