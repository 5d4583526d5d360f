//! Small dense linear algebra and fixed-step integration.
//!
//! Everything in here is sized for control design on systems of a dozen
//! states or fewer: dense row-major storage, partial-pivot LU, Kronecker
//! vectorization for matrix equations, and a classical fixed-step
//! Runge-Kutta stepper. No external solver backends.

mod matrix;
mod ode;
mod poly;
mod solve;
mod stability;

pub use matrix::{Lu, Matrix};
pub use ode::rk4_step;
pub use poly::Polynomial;
pub use solve::{controllability_rank, solve_care, solve_lyapunov, CareSolution};
pub use stability::{ackermann, char_poly, is_hurwitz_matrix, pole_place_chain, routh_hurwitz};

use thiserror::Error;

/// Errors from synthesis and integration numerics.
#[derive(Debug, Clone, Error)]
pub enum NumError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system in {0}")]
    Singular(&'static str),
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(&'static str),
    #[error("weight matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("pair is not stabilizable (no stabilizing seed gain found)")]
    NotStabilizable,
    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid pole set: {0}")]
    InvalidPoles(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("solution residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
