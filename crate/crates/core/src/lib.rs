//! Exact moments of Markovian multivariate Hawkes processes and of the
//! infinite-server queues they feed.
//!
//! Most of the crate is generic over the scalar: `f64` for numerics, or
//! [`num_rational::BigRational`] where exact linear algebra is enough
//! (assembling moment systems, stationary solves, block matrices). The
//! aliases below fix the common choices.

pub mod asymptotics;
pub mod bivariate;
pub mod config;
pub mod error;
pub mod fd;
pub mod model;
pub mod moments;
pub mod numerics;
pub mod presets;
pub mod report;
pub mod scalar;
pub mod simulator;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Model = model::HawkesModel<f64>;
pub type ExactModel = model::HawkesModel<Rational>;
pub type Symmetric = model::SymmetricModel<f64>;
pub type Marks = model::MarkLaw<f64>;
pub type Table = moments::MomentTable<f64>;
pub type ExactTable = moments::MomentTable<Rational>;
pub type System = moments::MomentSystem<f64>;
pub type ExactSystem = moments::MomentSystem<Rational>;
pub type Blocks = bivariate::BlockSystem<f64>;
pub type ExactBlocks = bivariate::BlockSystem<Rational>;
