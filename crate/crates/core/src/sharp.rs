//! Sharp decay constants for 2x2 systems.
//!
//! The optimal `c` in `|f(t)| <= c exp(-mu t) |f(0)|` depends only on the
//! eigenvalues and the eigenvector overlap `alpha`. Equal eigenvalues give
//! `c = 1`, equal real parts give `sqrt((1+alpha)/(1-alpha))` at a finite
//! time, equal imaginary parts give `1/sqrt(1-alpha^2)` in the limit, and the
//! remaining case is the square root of the supremum of the upper envelope
//! factor `m_plus`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::propagator::fundamental_matrix;
use crate::spectral::{canonical_2d_form, eigendecompose, CVector, Canonical2DForm, ComplexMatrix, SpectralData};
use crate::{Complex64, Error, Result};

/// Relative tolerance for comparing eigenvalue components.
pub const CASE_TOLERANCE: f64 = 1e-10;
pub const SCAN_POINTS: usize = 100_000;
const SCAN_POINTS_CAP: usize = 4_000_000;
pub const WINDOW_DECAYS: f64 = 20.0;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case2D {
    EqualEigenvalues,
    EqualRealParts,
    EqualImaginaryParts,
    FullyDistinct,
}

impl Case2D {
    pub fn name(self) -> &'static str {
        match self {
            Case2D::EqualEigenvalues => "EqualEigenvalues",
            Case2D::EqualRealParts => "EqualRealParts",
            Case2D::EqualImaginaryParts => "EqualImaginaryParts",
            Case2D::FullyDistinct => "FullyDistinct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attainment {
    Finite(f64),
    Asymptotic,
}

#[derive(Debug, Clone)]
pub struct SharpResult2D {
    pub case: Case2D,
    pub alpha: f64,
    pub c_sharp: f64,
    /// `(1/sqrt(1-alpha^2), sqrt((1+alpha)/(1-alpha)))`.
    pub bracket: (f64, f64),
    pub attained: Attainment,
    /// Set when the numeric supremum could not be separated cleanly from the
    /// bound on the unscanned tail.
    pub tail_uncertain: bool,
}

/// Parameters of the envelope factors, `gamma = Re(l2 - l1) >= 0` and
/// `delta = Im(l2 - l1)`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeParams {
    pub alpha: f64,
    pub gamma_re: f64,
    pub delta_im: f64,
    pub base_rate: f64,
}

impl EnvelopeParams {
    pub fn from_form(form: &Canonical2DForm) -> Self {
        let (l1, l2) = form.eigenvalues;
        let d = l2 - l1;
        Self {
            alpha: form.alpha,
            gamma_re: d.re,
            delta_im: d.im,
            base_rate: l1.re,
        }
    }

    /// `exp(-gamma t) A(t)` with `A = (cosh(gamma t) - alpha^2 cos(delta t)) / (1 - alpha^2)`.
    fn scaled_a(&self, t: f64) -> f64 {
        let a2 = self.alpha * self.alpha;
        let e = (-self.gamma_re * t).exp();
        (0.5 * (1.0 + e * e) - a2 * e * (self.delta_im * t).cos()) / (1.0 - a2)
    }

    pub fn m_plus(&self, t: f64) -> f64 {
        let ea = self.scaled_a(t);
        let e2 = (-2.0 * self.gamma_re * t).exp();
        ea + (ea * ea - e2).max(0.0).sqrt()
    }

    /// Uses `m_plus * m_minus = exp(-2 gamma t)` to avoid cancellation.
    pub fn m_minus(&self, t: f64) -> f64 {
        (-2.0 * self.gamma_re * t).exp() / self.m_plus(t)
    }

    pub fn h_plus(&self, t: f64) -> f64 {
        (-2.0 * self.base_rate * t).exp() * self.m_plus(t)
    }

    pub fn h_minus(&self, t: f64) -> f64 {
        (-2.0 * self.base_rate * t).exp() * self.m_minus(t)
    }
}

fn require_2x2(c: &ComplexMatrix) -> Result<SpectralData> {
    if c.dim() != 2 {
        return Err(Error::NotTwoByTwo(c.dim()));
    }
    let spec = eigendecompose(c)?;
    spec.require_diagonalizable()?;
    Ok(spec)
}

fn classify(l1: Complex64, l2: Complex64) -> Case2D {
    let tol = CASE_TOLERANCE * l1.norm().max(l2.norm());
    let re_eq = (l1.re - l2.re).abs() <= tol;
    let im_eq = (l1.im - l2.im).abs() <= tol;
    match (re_eq, im_eq) {
        (true, true) => Case2D::EqualEigenvalues,
        (true, false) => Case2D::EqualRealParts,
        (false, true) => Case2D::EqualImaginaryParts,
        (false, false) => Case2D::FullyDistinct,
    }
}

pub fn classify_and_sharp_constant(c: &ComplexMatrix) -> Result<SharpResult2D> {
    let spec = require_2x2(c)?;
    if !spec.positive_stable {
        return Err(Error::NotPositiveStable {
            mu: spec.spectral_gap(),
        });
    }
    let form = canonical_2d_form(&spec)?;
    Ok(sharp_constant_of_form(&form))
}

pub fn sharp_constant_of_form(form: &Canonical2DForm) -> SharpResult2D {
    let (l1, l2) = form.eigenvalues;
    let case = classify(l1, l2);
    let alpha = form.alpha;
    let a2 = alpha * alpha;
    let bracket = (1.0 / (1.0 - a2).sqrt(), ((1.0 + alpha) / (1.0 - alpha)).sqrt());
    let mut out = SharpResult2D {
        case,
        alpha,
        c_sharp: 1.0,
        bracket,
        attained: Attainment::Finite(0.0),
        tail_uncertain: false,
    };
    if case == Case2D::EqualEigenvalues || alpha == 0.0 {
        return out;
    }
    match case {
        Case2D::EqualRealParts => {
            out.c_sharp = bracket.1;
            out.attained = Attainment::Finite(PI / (l2 - l1).im.abs());
        }
        Case2D::EqualImaginaryParts => {
            out.c_sharp = bracket.0;
            out.attained = Attainment::Asymptotic;
        }
        _ => {
            let sup = sup_m_plus_params(&EnvelopeParams::from_form(form));
            out.c_sharp = sup.value.sqrt();
            out.attained = sup.argmax.map_or(Attainment::Asymptotic, Attainment::Finite);
            out.tail_uncertain = sup.tail_uncertain;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct SupResult {
    pub value: f64,
    /// `None` when the supremum is the limit as `t -> infinity`.
    pub argmax: Option<f64>,
    pub tail_uncertain: bool,
}

pub fn sup_m_plus(c: &ComplexMatrix) -> Result<SupResult> {
    let spec = require_2x2(c)?;
    let form = canonical_2d_form(&spec)?;
    Ok(sup_m_plus_params(&EnvelopeParams::from_form(&form)))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

pub fn sup_m_plus_params(p: &EnvelopeParams) -> SupResult {
    let a2 = p.alpha * p.alpha;
    let asymptote = 1.0 / (1.0 - a2);
    let scale = p.gamma_re.abs().max(p.delta_im.abs());
    let gamma_zero = p.gamma_re.abs() <= CASE_TOLERANCE * scale;
    if p.alpha == 0.0 || scale == 0.0 {
        return SupResult {
            value: 1.0,
            argmax: Some(0.0),
            tail_uncertain: false,
        };
    }
    let window = if gamma_zero {
        2.0 * PI / p.delta_im.abs()
    } else {
        WINDOW_DECAYS / p.gamma_re
    };
    let oscillations = p.delta_im.abs() * window / (2.0 * PI);
    let n = SCAN_POINTS.max((oscillations * 200.0) as usize).min(SCAN_POINTS_CAP);
    let h = window / n as f64;
    let (i_best, v_best) = (0..=n)
        .into_par_iter()
        .map(|i| (i, p.m_plus(i as f64 * h)))
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let lo = (i_best.saturating_sub(1)) as f64 * h;
    let hi = ((i_best + 1).min(n)) as f64 * h;
    let (t_ref, v_ref) = golden_max(|t| p.m_plus(t), lo, hi, GOLDEN_TOL);
    let (t_best, found) = if v_ref >= v_best {
        (t_ref, v_ref)
    } else {
        (i_best as f64 * h, v_best)
    };
    if gamma_zero {
        return SupResult {
            value: found,
            argmax: Some(t_best),
            tail_uncertain: false,
        };
    }
    // for t >= window, m_plus <= 2 exp(-gamma t) A(t)
    let e = (-p.gamma_re * window).exp();
    let tail = (1.0 + e * e + 2.0 * a2 * e) / (1.0 - a2);
    if found <= asymptote {
        return SupResult {
            value: asymptote,
            argmax: None,
            tail_uncertain: false,
        };
    }
    SupResult {
        value: found,
        argmax: Some(t_best),
        tail_uncertain: tail - asymptote > 0.1 * (found - asymptote),
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeCurve {
    pub times: Vec<f64>,
    pub h_minus: Vec<f64>,
    pub h_plus: Vec<f64>,
    pub gamma_re: f64,
    pub delta_im: f64,
    pub alpha: f64,
}

/// Pointwise maximum and minimum of `|f(t)|^2` over unit initial data.
pub fn envelope_curves(c: &ComplexMatrix, times: &[f64]) -> Result<EnvelopeCurve> {
    let spec = require_2x2(c)?;
    let form = canonical_2d_form(&spec)?;
    Ok(envelope_curves_of_form(&form, times))
}

pub fn envelope_curves_of_form(form: &Canonical2DForm, times: &[f64]) -> EnvelopeCurve {
    let p = EnvelopeParams::from_form(form);
    let (l1, l2) = form.eigenvalues;
    if classify(l1, l2) == Case2D::EqualEigenvalues {
        let h: Vec<f64> = times.iter().map(|t| (-2.0 * l1.re * t).exp()).collect();
        return EnvelopeCurve {
            times: times.to_vec(),
            h_minus: h.clone(),
            h_plus: h,
            gamma_re: 0.0,
            delta_im: 0.0,
            alpha: form.alpha,
        };
    }
    EnvelopeCurve {
        times: times.to_vec(),
        h_minus: times.iter().map(|&t| p.h_minus(t)).collect(),
        h_plus: times.iter().map(|&t| p.h_plus(t)).collect(),
        gamma_re: p.gamma_re,
        delta_im: p.delta_im,
        alpha: form.alpha,
    }
}

/// `g(z) = (1 - alpha^2)(1/b + b z^2) / (1 - 2 alpha z + z^2)`, the ratio of
/// the weighted to the Euclidean squared norm along the direction
/// `v1 + z v2` in canonical coordinates.
pub fn sector_g(alpha: f64, b: f64, z: f64) -> f64 {
    (1.0 - alpha * alpha) * (1.0 / b + b * z * z) / (1.0 - 2.0 * alpha * z + z * z)
}

/// Stationary points `(z_plus, z_minus)` of `g`; `None` for `alpha = 0`.
pub fn sector_stationary_points(alpha: f64, b: f64) -> Option<(f64, f64)> {
    if alpha == 0.0 {
        return None;
    }
    let d = b - 1.0 / b;
    let root = (d * d + 4.0 * alpha * alpha).sqrt();
    Some(((d + root) / (2.0 * alpha * b), (d - root) / (2.0 * alpha * b)))
}

fn g_extended(alpha: f64, b: f64, z: f64) -> f64 {
    if z.is_infinite() {
        (1.0 - alpha * alpha) * b
    } else {
        sector_g(alpha, b, z)
    }
}

fn g_inf_on(alpha: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let mut m = g_extended(alpha, b, lo).min(g_extended(alpha, b, hi));
    if let Some((zp, zm)) = sector_stationary_points(alpha, b) {
        for z in [zp, zm] {
            if lo <= z && z <= hi {
                m = m.min(sector_g(alpha, b, z));
            }
        }
    }
    m
}

/// Constant of the weighted estimate restricted to the sector between the
/// eigendirection `v1` and `v1 + gamma_sector v2`. Infinite `gamma_sector`
/// gives the half-plane limits.
pub fn sector_constant(alpha: f64, b: f64, gamma_sector: f64) -> f64 {
    let (lo, hi) = (gamma_sector.min(0.0), gamma_sector.max(0.0));
    g_extended(alpha, b, gamma_sector) / g_inf_on(alpha, b, lo, hi)
}

/// `sup` over all sectors of `sector_constant`, evaluated at the finitely many
/// candidates: the stationary points of `g` and the two half-line limits.
pub fn sector_sup_closed_form(alpha: f64, b: f64) -> f64 {
    let mut best = 1.0f64;
    let mut cands = vec![f64::INFINITY, f64::NEG_INFINITY];
    if let Some((zp, zm)) = sector_stationary_points(alpha, b) {
        cands.push(zp);
        cands.push(zm);
    }
    for z in cands {
        best = best.max(sector_constant(alpha, b, z));
    }
    best
}

/// Unit initial datum `(cos phi, sin phi e^{i theta})`.
pub fn unit_datum(phi: f64, theta: f64) -> CVector {
    CVector::from_vec(vec![
        Complex64::new(phi.cos(), 0.0),
        Complex64::from_polar(phi.sin(), theta),
    ])
}

#[derive(Debug, Clone, Copy)]
pub struct OracleGrid {
    pub n_phi: usize,
    pub n_theta: usize,
    /// Alternating golden-section rounds on `phi` and `theta` started from the
    /// best grid point; zero disables polishing.
    pub polish_rounds: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            n_phi: 720,
            n_theta: 720,
            polish_rounds: 6,
        }
    }
}

/// Brute-force max and min of `|exp(-C t) f|^2` over unit data for each `t`.
pub fn envelope_oracle(c: &ComplexMatrix, times: &[f64], grid: OracleGrid) -> Result<Vec<(f64, f64)>> {
    let spec = require_2x2(c)?;
    let phis: Vec<(f64, f64, f64)> = (0..grid.n_phi)
        .map(|i| {
            let p = 2.0 * PI * i as f64 / grid.n_phi as f64;
            (p, p.cos(), p.sin())
        })
        .collect();
    let thetas: Vec<(f64, Complex64)> = (0..grid.n_theta)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / grid.n_theta as f64;
            (th, Complex64::from_polar(1.0, th))
        })
        .collect();
    let dphi = 2.0 * PI / grid.n_phi as f64;
    let dtheta = 2.0 * PI / grid.n_theta as f64;
    times
        .par_iter()
        .map(|&t| {
            let phi_t = fundamental_matrix(&spec, t)?;
            let (a, b, cc, d) = (phi_t[(0, 0)], phi_t[(0, 1)], phi_t[(1, 0)], phi_t[(1, 1)]);
            let q = |cp: f64, sp: f64, e: Complex64| {
                let y2 = e * sp;
                (a * cp + b * y2).norm_sqr() + (cc * cp + d * y2).norm_sqr()
            };
            let qa = |phi: f64, theta: f64| q(phi.cos(), phi.sin(), Complex64::from_polar(1.0, theta));
            let mut hi = (f64::NEG_INFINITY, 0.0, 0.0);
            let mut lo = (f64::INFINITY, 0.0, 0.0);
            for &(p, cp, sp) in &phis {
                for &(th, e) in &thetas {
                    let v = q(cp, sp, e);
                    if v > hi.0 {
                        hi = (v, p, th);
                    }
                    if v < lo.0 {
                        lo = (v, p, th);
                    }
                }
            }
            let polish = |start: (f64, f64, f64), sign: f64| {
                let (mut v, mut p, mut th) = start;
                for _ in 0..grid.polish_rounds {
                    let (p2, v2) = golden_max(|x| sign * qa(x, th), p - dphi, p + dphi, 1e-13);
                    if sign * v2 >= sign * v {
                        p = p2;
                        v = sign * v2;
                    }
                    let (th2, v3) = golden_max(|x| sign * qa(p, x), th - dtheta, th + dtheta, 1e-13);
                    if sign * v3 >= sign * v {
                        th = th2;
                        v = sign * v3;
                    }
                }
                v
            };
            Ok((polish(hi, 1.0), polish(lo, -1.0)))
        })
        .collect()
}

/// `max over (phi, theta, t)` of `exp(2 rate t) |exp(-C t) f|^2`.
pub fn trajectory_sup_oracle(c: &ComplexMatrix, times: &[f64], rate: f64, grid: OracleGrid) -> Result<f64> {
    let env = envelope_oracle(c, times, grid)?;
    Ok(env
        .iter()
        .zip(times)
        .map(|((hi, _), t)| (2.0 * rate * t).exp() * hi)
        .fold(f64::NEG_INFINITY, f64::max))
}
