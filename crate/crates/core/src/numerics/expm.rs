use nalgebra::DMatrix;

use super::linalg::{check_finite, check_square, norm_1};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `exp(tA)` by Padé scaling and squaring.
pub fn mat_exp<T: Real>(a: &DMatrix<T>, t: T) -> Result<DMatrix<T>> {
    check_square(a)?;
    check_finite(a, "matrix")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    let n = a.nrows();
    if n == 0 || t.is_zero() {
        return Ok(DMatrix::identity(n, n));
    }
    let out = (a * t).exp();
    check_finite(&out, "matrix exponential")?;
    Ok(out)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Norm bound below which the degree-13 Padé approximant is accurate to
/// double precision.
const THETA13: f64 = 5.371920351148152;

/// `exp(tA)` with the amount of work fixed in advance.
///
/// The scaling exponent is chosen once from `‖A‖₁` and `horizon`, so every
/// evaluation with `0 < t ≤ horizon` performs exactly the same operations
/// (one degree-13 Padé approximant and the same number of squarings).
#[derive(Debug, Clone)]
pub struct FixedExpm<T: nalgebra::Scalar> {
    a: DMatrix<T>,
    horizon: T,
    squarings: u32,
}

impl<T: Real> FixedExpm<T> {
    pub fn new(a: &DMatrix<T>, horizon: T) -> Result<Self> {
        check_square(a)?;
        check_finite(a, "matrix")?;
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidArgument("horizon must be finite and positive".into()));
        }
        let reach = norm_1(a).approx() * horizon.approx() / THETA13;
        let squarings = if reach > 1.0 { reach.log2().ceil() as u32 } else { 0 };
        Ok(Self { a: a.clone(), horizon, squarings })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn squarings(&self) -> u32 {
        self.squarings
    }

    /// `exp(tA)` for `0 ≤ t ≤ horizon`.
    pub fn eval(&self, t: T) -> Result<DMatrix<T>> {
        if !(t >= T::zero() && t <= self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "time {t:?} outside [0, {:?}]",
                self.horizon
            )));
        }
        let scale = t / T::lit(2f64.powi(self.squarings as i32));
        let a = &self.a * scale;
        let mut r = pade13(&a)?;
        for _ in 0..self.squarings {
            r = &r * &r;
        }
        check_finite(&r, "matrix exponential")?;
        Ok(r)
    }
}

fn pade13<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let b = |i: usize| T::lit(PADE13[i]);
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = a * (u_inner + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::Singular { cond: f64::INFINITY })
}
