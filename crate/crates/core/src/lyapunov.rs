//! Lyapunov matrices and decay certificates.
//!
//! A Hermitian positive definite `P` is admissible at rate `r` when
//! `C*P + PC - 2rP >= 0`. Along solutions of `f' = -Cf` the adapted norm
//! `<f, Pf>` then decays like `exp(-2rt)`, and the Euclidean norm obeys
//! `|f(t)| <= sqrt(kappa(P)) exp(-rt) |f(0)|`.

use num_complex::Complex64;

use crate::spectral::{hermitian_eigen, spectral_norm, CMatrix, ComplexMatrix, SpectralData};
use crate::{Error, Result, Tolerances};

/// Whether a bound estimates the norm from above or from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Debug, Clone)]
pub struct LyapunovMatrix {
    pub p: CMatrix,
    /// Present when built as `sum_j b_j w_j w_j*`.
    pub weights: Option<Vec<f64>>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl LyapunovMatrix {
    /// Validates Hermitian symmetry and positive definiteness.
    pub fn new(p: CMatrix) -> Result<Self> {
        Self::with_tolerance(p, Tolerances::default().hermitian)
    }

    pub fn with_tolerance(p: CMatrix, hermitian_tol: f64) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::InvalidInput("Lyapunov matrix must be square".into()));
        }
        let scale = p.norm().max(f64::MIN_POSITIVE);
        if (&p - p.adjoint()).norm() > hermitian_tol * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let p = (&p + p.adjoint()).scale(0.5);
        let (ev, _) = hermitian_eigen(&p);
        let lambda_min = ev[0];
        let lambda_max = ev[ev.len() - 1];
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            p,
            weights: None,
            lambda_min,
            lambda_max,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    pub fn scaled(&self, tau: f64) -> Self {
        Self {
            p: self.p.scale(tau),
            weights: self.weights.as_ref().map(|w| w.iter().map(|b| b * tau).collect()),
            lambda_min: self.lambda_min * tau,
            lambda_max: self.lambda_max * tau,
        }
    }

    /// Squared adapted norm `<x, P x>`.
    pub fn energy(&self, x: &crate::spectral::CVector) -> f64 {
        x.dotc(&(&self.p * x)).re
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub rate: f64,
    pub constant: f64,
    pub p: LyapunovMatrix,
    /// Minimum (upper certificates) or maximum (lower certificates) eigenvalue
    /// of `C*P + PC - 2 rate P`.
    pub residual: f64,
    pub direction: Direction,
}

/// `P = sum_j b_j w_j w_j*` from the unit eigenvectors of `C*`.
pub fn build_weighted_p(spec: &SpectralData, weights: &[f64]) -> Result<LyapunovMatrix> {
    spec.require_diagonalizable()?;
    if weights.len() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "{} weights for a {}-dimensional system",
            weights.len(),
            spec.dim()
        )));
    }
    if weights.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let n = spec.dim();
    let mut p = CMatrix::zeros(n, n);
    for (j, &b) in weights.iter().enumerate() {
        let w = spec.left.column(j);
        p += (w * w.adjoint()).scale(b);
    }
    let mut m = LyapunovMatrix::new(p)?;
    m.weights = Some(weights.to_vec());
    Ok(m)
}

/// The Hermitian matrix `C*P + PC - 2 rate P`.
pub fn inequality_matrix(c: &ComplexMatrix, p: &CMatrix, rate: f64) -> CMatrix {
    let m = c.adjoint() * p + p * c.matrix() - p.map(|z| z * Complex64::new(2.0 * rate, 0.0));
    (&m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of `C*P + PC - 2 rate P`; non-negative values certify
/// admissibility.
pub fn lyapunov_residual(c: &ComplexMatrix, p: &LyapunovMatrix, rate: f64) -> f64 {
    hermitian_eigen(&inequality_matrix(c, &p.p, rate)).0[0]
}

/// Largest eigenvalue of `C*P + PC - 2 rate P`; non-positive values certify a
/// lower bound at this rate.
pub fn lyapunov_residual_upper(c: &ComplexMatrix, p: &LyapunovMatrix, rate: f64) -> f64 {
    let ev = hermitian_eigen(&inequality_matrix(c, &p.p, rate)).0;
    ev[ev.len() - 1]
}

/// Absolute admissibility slack for the pair `(C, P)`.
pub fn admissibility_slack(c: &ComplexMatrix, p: &LyapunovMatrix, tol: &Tolerances) -> f64 {
    tol.residual_relative * spectral_norm(c.matrix()) * p.lambda_max
}

pub fn certificate_from_p(c: &ComplexMatrix, p: LyapunovMatrix, rate: f64) -> Result<LyapunovCertificate> {
    certificate_from_p_with(c, p, rate, &Tolerances::default())
}

pub fn certificate_from_p_with(
    c: &ComplexMatrix,
    p: LyapunovMatrix,
    rate: f64,
    tol: &Tolerances,
) -> Result<LyapunovCertificate> {
    let residual = lyapunov_residual(c, &p, rate);
    if residual < -admissibility_slack(c, &p, tol) {
        return Err(Error::NotAdmissible { rate, residual });
    }
    Ok(LyapunovCertificate {
        rate,
        constant: p.kappa().sqrt(),
        p,
        residual,
        direction: Direction::Upper,
    })
}

/// Certificate for `|f(t)| >= kappa(P)^(-1/2) exp(-rate t) |f(0)|`, requiring
/// `C*P + PC <= 2 rate P`.
pub fn lower_certificate_from_p(c: &ComplexMatrix, p: LyapunovMatrix, rate: f64) -> Result<LyapunovCertificate> {
    let residual = lyapunov_residual_upper(c, &p, rate);
    if residual > admissibility_slack(c, &p, &Tolerances::default()) {
        return Err(Error::NotAdmissible { rate, residual });
    }
    Ok(LyapunovCertificate {
        rate,
        constant: p.kappa().sqrt().recip(),
        p,
        residual,
        direction: Direction::Lower,
    })
}
