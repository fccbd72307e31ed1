//! Decay certificates for linear ODE systems `f' = -C f`.
//!
//! The crate builds Lyapunov matrices `P` satisfying `C*P + PC >= 2 mu P`,
//! minimizes their condition number, computes sharp exponential decay rates
//! together with minimal multiplicative constants for 2x2 systems, and applies
//! the machinery mode by mode to the two-velocity Goldstein-Taylor model on
//! the torus.
//!
//! Module map:
//!
//! - [`spectral`]: small dense complex eigendecomposition, stability report,
//!   canonical 2x2 coordinates.
//! - [`lyapunov`]: weighted Lyapunov matrices, inequality residuals and
//!   certificates.
//! - [`condition`]: condition-number minimization over admissible matrices.
//! - [`sharp`]: case analysis and sharp constants for 2x2 systems, norm
//!   envelopes, sector functionals and the brute-force trajectory oracle.
//! - [`family`]: suboptimal-rate upper and lower bound families.
//! - [`goldstein_taylor`]: modal decomposition and exact evolution of the
//!   Goldstein-Taylor model.
//! - [`propagator`]: exact and Runge-Kutta propagation, bound verification.
//! - [`io`]: file formats and the command implementations behind the CLI.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod condition;
pub mod error;
pub mod family;
pub mod goldstein_taylor;
pub mod io;
pub mod lyapunov;
pub mod propagator;
pub mod sharp;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Numerical tolerances shared across modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvector-matrix condition number above which a matrix is treated
    /// as defective.
    pub defect_condition: f64,
    /// Relative tolerance for comparing eigenvalue components.
    pub eigen_relative: f64,
    /// Relative slack on Lyapunov inequality residuals, scaled by `|C| |P|`.
    pub residual_relative: f64,
    /// Relative tolerance for Hermitian symmetry checks.
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            defect_condition: 1e8,
            eigen_relative: 1e-10,
            residual_relative: 1e-10,
            hermitian: 1e-12,
        }
    }
}
