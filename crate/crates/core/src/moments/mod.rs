//! Exact joint moments of `(λ(t), Q(t))` for general dimension.

pub mod counts;
pub mod index;
pub mod solve;
pub mod system;
pub mod table;

pub use counts::hawkes_count_moments;
pub use index::{dimension, enumerate_indices, stacked_dimension, MomentIndex};
pub use solve::{
    closed_form_system, first_order_means, ClosedFormEvaluator, DEFAULT_HORIZON, integrate_system, stationary_from_system,
    stationary_moments, stationary_moments_exact, stationary_second_order_sylvester,
    transient_moments, TransientMethod,
};
pub use system::{assemble_system, row_terms, MomentSystem};
pub use table::{factorial_to_raw, stirling2, Horizon, MomentTable};
