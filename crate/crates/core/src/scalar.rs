//! Scalar abstractions shared by every module.
//!
//! [`Scalar`] is the minimal field-like bound used for structure-only code
//! (index bookkeeping, system assembly, block builders). It is satisfied by
//! `f32`, `f64` and [`num_rational::BigRational`], so generator matrices can be
//! assembled exactly. [`Real`] adds the transcendental functions needed by the
//! numerical solvers.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

/// Field elements usable for exact or floating-point assembly.
pub trait Scalar:
    Num
    + NumAssign
    + Neg<Output = Self>
    + Clone
    + Debug
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for non-finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("representable count")
    }

    /// Absolute value through the ordering.
    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Lossy conversion for reporting and condition estimates.
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num
        + NumAssign
        + Neg<Output = T>
        + Clone
        + Debug
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalars (`f32`, `f64`).
pub trait Real: Scalar + nalgebra::RealField + Copy {}

impl<T> Real for T where T: Scalar + nalgebra::RealField + Copy {}

/// Shorthand for `T::lit`.
#[inline]
pub fn c<T: Scalar>(x: f64) -> T {
    T::lit(x)
}
