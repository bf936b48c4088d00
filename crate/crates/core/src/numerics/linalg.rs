use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Systems whose 1-norm condition number exceeds this are rejected.
pub const COND_LIMIT: f64 = 1e12;

pub(crate) fn check_square<T: nalgebra::Scalar>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

pub(crate) fn check_finite<T: Real>(a: &DMatrix<T>, what: &'static str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Maximum absolute column sum.
pub fn norm_1<T: Real>(a: &DMatrix<T>) -> T {
    let mut best = T::zero();
    for col in a.column_iter() {
        let s = col.iter().fold(T::zero(), |acc, x| acc + x.abs());
        if s > best {
            best = s;
        }
    }
    best
}

/// 1-norm condition number, `inf` for a singular matrix.
pub fn cond_1<T: Real>(a: &DMatrix<T>) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => (norm_1(a) * norm_1(&inv)).approx(),
        None => f64::INFINITY,
    }
}

/// Solves `A X = B` by LU with partial pivoting.
///
/// Fails when the 1-norm condition number exceeds [`COND_LIMIT`].
pub fn solve_linear<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(a)?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "rhs has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    check_finite(a, "matrix")?;
    check_finite(b, "right-hand side")?;
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
    let cond = (norm_1(a) * norm_1(&inv)).approx();
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::Singular { cond });
    }
    lu.solve(b).ok_or(Error::Singular { cond })
}

/// Gaussian elimination in exact arithmetic (or any [`Scalar`]).
///
/// Pivots on the entry of largest magnitude, which for rationals only
/// matters for speed.
pub fn solve_exact<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(a)?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("rhs has {} rows, matrix has {}", b.nrows(), n)));
    }
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].magnitude();
        for r in col + 1..n {
            let v = m[(r, col)].magnitude();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best.is_zero() {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        if piv != col {
            m.swap_rows(piv, col);
            x.swap_rows(piv, col);
        }
        let p = m[(col, col)].clone();
        for r in col + 1..n {
            if m[(r, col)].is_zero() {
                continue;
            }
            let f = m[(r, col)].clone() / p.clone();
            for c in col..n {
                let v = f.clone() * m[(col, c)].clone();
                m[(r, c)] -= v;
            }
            for c in 0..x.ncols() {
                let v = f.clone() * x[(col, c)].clone();
                x[(r, c)] -= v;
            }
        }
    }
    for col in (0..n).rev() {
        let p = m[(col, col)].clone();
        for c in 0..x.ncols() {
            let mut acc = x[(col, c)].clone();
            for k in col + 1..n {
                acc -= m[(col, k)].clone() * x[(k, c)].clone();
            }
            x[(col, c)] = acc / p.clone();
        }
    }
    Ok(x)
}
