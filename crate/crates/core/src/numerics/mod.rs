//! Dense linear algebra, matrix functions, ODE integration and quadrature.

pub mod expm;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod spectrum;
pub mod sylvester;

pub use expm::{mat_exp, FixedExpm};
pub use linalg::{cond_1, norm_1, solve_exact, solve_linear, COND_LIMIT};
pub use ode::{integrate_ode, integrate_ode_dense, OdeConfig, Trajectory};
pub use quad::{gauss_legendre, quad_adaptive};
pub use spectrum::{eigenvalues, spectral_radius};
pub use sylvester::solve_sylvester;

/// Dense matrix used throughout the crate.
pub type Matrix<T> = nalgebra::DMatrix<T>;
/// Dense column vector.
pub type Vector<T> = nalgebra::DVector<T>;
