//! Decay bounds at suboptimal rates for 2x2 systems.
//!
//! For every rate `r` in `[mu_s, mu]` the solution satisfies
//! `|f(t)| <= c1(r) exp(-r t) |f(0)|`, and for every `r` in `[nu, nu_s]`
//! `|f(t)| >= c2(r) exp(-r t) |f(0)|`. Both constants come from the
//! Lyapunov matrices `W [[1, beta], [beta, 1]] W*` with the admissible
//! `beta` of smallest condition number.

use rayon::prelude::*;
use serde::Serialize;

use crate::lyapunov::{Direction, LyapunovMatrix};
use crate::spectral::{CMatrix, Canonical2DForm};
use crate::{Complex64, Error, Result};

pub const DEFAULT_RATES: usize = 64;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyBound {
    pub rate: f64,
    pub constant: f64,
    pub direction: Direction,
    pub beta_tilde: f64,
    pub beta0: f64,
}

impl FamilyBound {
    pub fn value(&self, t: f64) -> f64 {
        self.constant * (-self.rate * t).exp()
    }
}

/// Condition number of `W [[1, beta], [beta, 1]] W*` for unit eigenvectors
/// with overlap `alpha`.
pub fn kappa_min_beta(alpha: f64, beta: f64) -> f64 {
    // with q = (1 - a^2)(1 - b^2) / (1 + ab)^2 and r = sqrt(1 - q),
    // kappa = (1 + r) / (1 - r); note 1 - q = (a + b)^2 / (1 + ab)^2
    let d = 1.0 + alpha * beta;
    let s = (alpha + beta).abs();
    (d + s) / (d - s)
}

/// Largest admissible `|beta|` at `rate`; always in `[0, 1]`.
pub fn beta0(form: &Canonical2DForm, rate: f64) -> f64 {
    let (l1, l2) = form.eigenvalues;
    let denom = (l1 + l2.conj() - Complex64::new(2.0 * rate, 0.0)).norm_sqr();
    let num = 4.0 * (l1.re - rate) * (l2.re - rate);
    if denom <= f64::EPSILON * (l1.norm_sqr() + l2.norm_sqr()).max(f64::MIN_POSITIVE) {
        return 1.0;
    }
    (num / denom).clamp(0.0, 1.0).sqrt()
}

fn check_range(rate: f64, lo: f64, hi: f64) -> Result<f64> {
    let slack = RANGE_SLACK * (1.0 + lo.abs().max(hi.abs()));
    if !rate.is_finite() || rate < lo - slack || rate > hi + slack {
        return Err(Error::RateOutOfRange { rate, lo, hi });
    }
    Ok(rate.clamp(lo, hi))
}

fn bound(form: &Canonical2DForm, rate: f64, direction: Direction) -> FamilyBound {
    let b0 = beta0(form, rate);
    let bt = (-form.alpha).max(-b0);
    let kappa = kappa_min_beta(form.alpha, bt);
    let constant = match direction {
        Direction::Upper => kappa.sqrt(),
        Direction::Lower => 1.0 / kappa.sqrt(),
    };
    FamilyBound {
        rate,
        constant,
        direction,
        beta_tilde: bt,
        beta0: b0,
    }
}

/// `c1(rate)` for `mu_s <= rate <= mu`.
pub fn upper_bound_constant(form: &Canonical2DForm, rate: f64) -> Result<FamilyBound> {
    let st = form.stability();
    let rate = check_range(rate, st.mu_s, st.mu)?;
    Ok(bound(form, rate, Direction::Upper))
}

/// `c2(rate)` for `nu <= rate <= nu_s`.
pub fn lower_bound_constant(form: &Canonical2DForm, rate: f64) -> Result<FamilyBound> {
    let st = form.stability();
    let rate = check_range(rate, st.nu, st.nu_s)?;
    Ok(bound(form, rate, Direction::Lower))
}

/// The Lyapunov matrix behind a family bound, in original coordinates.
pub fn family_matrix(form: &Canonical2DForm, bound: &FamilyBound) -> Result<LyapunovMatrix> {
    let w = CMatrix::from_columns(&[form.w1_new.clone(), form.w2_new.clone()]);
    let bt = Complex64::new(bound.beta_tilde, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let b = CMatrix::from_row_slice(2, 2, &[one, bt, bt, one]);
    let p = &form.unitary * (&w * b * w.adjoint()) * form.unitary.adjoint();
    LyapunovMatrix::new(p)
}

/// Uniform grid of `n` rates on `[lo, hi]`.
pub fn rate_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn upper_family(form: &Canonical2DForm, n_rates: usize) -> Vec<FamilyBound> {
    let st = form.stability();
    rate_grid(st.mu_s, st.mu, n_rates)
        .into_par_iter()
        .map(|r| bound(form, r, Direction::Upper))
        .collect()
}

pub fn lower_family(form: &Canonical2DForm, n_rates: usize) -> Vec<FamilyBound> {
    let st = form.stability();
    rate_grid(st.nu, st.nu_s, n_rates)
        .into_par_iter()
        .map(|r| bound(form, r, Direction::Lower))
        .collect()
}

#[derive(Debug, Clone)]
pub struct FamilyEnvelope {
    pub times: Vec<f64>,
    pub upper: Vec<f64>,
    pub upper_rate: Vec<f64>,
    pub lower: Vec<f64>,
    pub lower_rate: Vec<f64>,
}

/// Pointwise best member of each family on `times`.
pub fn family_envelope(form: &Canonical2DForm, times: &[f64], n_rates: usize) -> Result<FamilyEnvelope> {
    if n_rates < 2 {
        return Err(Error::InvalidInput("need at least two rates".into()));
    }
    let up = upper_family(form, n_rates);
    let lo = lower_family(form, n_rates);
    let best = |fam: &[FamilyBound], t: f64, upper: bool| {
        fam.iter()
            .map(|b| (b.value(t), b.rate))
            .reduce(|a, b| if (b.0 < a.0) == upper && b.0 != a.0 { b } else { a })
            .unwrap()
    };
    let mut env = FamilyEnvelope {
        times: times.to_vec(),
        upper: Vec::with_capacity(times.len()),
        upper_rate: Vec::with_capacity(times.len()),
        lower: Vec::with_capacity(times.len()),
        lower_rate: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let (u, ur) = best(&up, t, true);
        let (l, lr) = best(&lo, t, false);
        env.upper.push(u);
        env.upper_rate.push(ur);
        env.lower.push(l);
        env.lower_rate.push(lr);
    }
    Ok(env)
}

/// Time at which two bound curves cross; `None` for equal rates.
pub fn intersection_time(a: &FamilyBound, b: &FamilyBound) -> Option<f64> {
    let dr = a.rate - b.rate;
    (dr != 0.0).then(|| (a.constant / b.constant).ln() / dr)
}

/// Whether all pairwise crossings of distinct-rate curves happen at one
/// common point, up to relative tolerance `tol` in time.
pub fn common_intersection(bounds: &[FamilyBound], tol: f64) -> bool {
    let mut times = Vec::new();
    for (i, a) in bounds.iter().enumerate() {
        for b in &bounds[i + 1..] {
            if let Some(t) = intersection_time(a, b) {
                times.push(t);
            }
        }
    }
    let Some(&t0) = times.first() else {
        return false;
    };
    times.iter().all(|t| (t - t0).abs() <= tol * (1.0 + t0.abs()))
}
