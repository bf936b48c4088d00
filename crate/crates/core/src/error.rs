use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("Sylvester operands share an eigenvalue (separation {separation:.3e})")]
    SharedEigenvalue { separation: f64 },

    #[error("ODE solver exhausted {steps} steps at t = {t}")]
    StepLimit { steps: usize, t: f64 },

    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("model is unstable: spectral radius {rho:.6}")]
    Unstable { rho: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mark moment of order {order} unavailable (max {max})")]
    MissingMarkMoment { order: usize, max: usize },

    #[error("outside the transform domain: {0}")]
    Domain(String),

    #[error("event cap of {cap} exceeded at t = {t:.4}; the model is likely near-unstable")]
    Explosion { cap: usize, t: f64 },

    #[error("moment table is missing index {0}")]
    MissingIndex(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
