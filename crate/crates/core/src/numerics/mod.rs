//! Dense linear algebra and integration kernel.
//!
//! Storage is `nalgebra`'s dynamically sized matrices; the factorizations and
//! matrix-equation solvers used by the controllers live here so that their
//! tolerances are controlled in one place.

mod care;
mod filter;
mod integrate;
mod linalg;
mod lyapunov;

pub use care::{solve_care, CARE_MAX_ITERATIONS, CARE_TOLERANCE};
pub use filter::{discretize_filter, SecondOrderFilter};
pub use integrate::integrate_step;
pub use linalg::{
    is_hurwitz, max_abs, max_real_eigenvalue, pseudo_inverse, spectral_norm, symmetric_eigen_range,
    Lu,
};
pub use lyapunov::solve_lyapunov;

use thiserror::Error;

/// Dense real matrix.
pub type Mat = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is rank deficient (B·Bᵀ numerically singular)")]
    RankDeficient,
    #[error("matrix is singular (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("matrix is not Hurwitz (max eigenvalue real part {max_real:e})")]
    NotHurwitz { max_real: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Newton-Kleinman iteration found no stabilizing solution after {iterations} iterations")]
    NoStabilizingSolution { iterations: usize },
    #[error("bad sampling: omega*dt = {omega_dt} must be < 1")]
    BadSampling { omega_dt: f64 },
    #[error("invalid filter parameter: {0}")]
    BadParameter(&'static str),
    #[error("integration produced a non-finite state")]
    NonFiniteState,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;
