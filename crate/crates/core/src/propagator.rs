//! Exact and reference propagation of `f' = -C f`, trajectory norms and
//! bound verification.

use num_complex::Complex64;

use crate::lyapunov::Direction;
use crate::spectral::{canonical_2d_form, CMatrix, CVector, ComplexMatrix, SpectralData};
use crate::{Error, Result};

/// `exp(-C t)` from the biorthonormal eigendata, `V exp(-D t) W*`.
pub fn fundamental_matrix(spec: &SpectralData, t: f64) -> Result<CMatrix> {
    spec.require_diagonalizable()?;
    let n = spec.dim();
    let mut vd = spec.right.clone();
    for j in 0..n {
        let e = (-spec.eigenvalues[j] * t).exp();
        for i in 0..n {
            vd[(i, j)] *= e;
        }
    }
    Ok(vd * spec.left.adjoint())
}

/// Solution at time `t` of `f' = -C f`, `f(0) = f0`.
///
/// Two-dimensional systems are propagated in canonical coordinates, where
/// `exp(lambda_1 t) f(t) = (y1, a/s (E - 1) y1 + E y2)` with
/// `E = exp(-(lambda_2 - lambda_1) t)` and `s = sqrt(1 - a^2)`.
pub fn exact_solution(spec: &SpectralData, f0: &CVector, t: f64) -> Result<CVector> {
    spec.require_diagonalizable()?;
    if f0.len() != spec.dim() {
        return Err(Error::InvalidInput("initial datum has wrong length".into()));
    }
    if spec.dim() == 2 {
        let form = canonical_2d_form(spec)?;
        let y = form.to_canonical(f0);
        let (l1, l2) = form.eigenvalues;
        let a = form.alpha;
        let s = (1.0 - a * a).sqrt();
        let e = (-(l2 - l1) * t).exp();
        let one = Complex64::new(1.0, 0.0);
        let y2 = (e - one) * y[0] * (a / s) + e * y[1];
        let yt = CVector::from_vec(vec![y[0], y2]) * (-l1 * t).exp();
        return Ok(form.from_canonical(&yt));
    }
    let coeffs = spec.left.adjoint() * f0;
    let mut out = CVector::zeros(spec.dim());
    for (j, l) in spec.eigenvalues.iter().enumerate() {
        out += spec.right.column(j) * (coeffs[j] * (-l * t).exp());
    }
    Ok(out)
}

/// Classical fourth-order Runge-Kutta integration with uniform steps no
/// larger than `dt`.
pub fn rk4_oracle(c: &ComplexMatrix, f0: &CVector, t: f64, dt: f64) -> Result<CVector> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidInput("need dt > 0 and t >= 0".into()));
    }
    let steps = (t / dt).ceil() as usize;
    if steps == 0 {
        return Ok(f0.clone());
    }
    let h = t / steps as f64;
    let a = -c.matrix();
    let mut f = f0.clone();
    for _ in 0..steps {
        let k1 = &a * &f;
        let k2 = &a * (&f + &k1 * Complex64::new(h / 2.0, 0.0));
        let k3 = &a * (&f + &k2 * Complex64::new(h / 2.0, 0.0));
        let k4 = &a * (&f + &k3 * Complex64::new(h, 0.0));
        f += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
    }
    Ok(f)
}

/// Euclidean norms of one trajectory on a time grid.
#[derive(Debug, Clone)]
pub struct TrajectoryNorms {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub initial: f64,
}

impl TrajectoryNorms {
    pub fn sample(spec: &SpectralData, f0: &CVector, times: &[f64]) -> Result<Self> {
        let norms = times
            .iter()
            .map(|&t| exact_solution(spec, f0, t).map(|f| f.norm()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            norms,
            initial: f0.norm(),
        })
    }
}

/// `|f(t)| <= constant exp(-rate t) |f(0)|` (upper) or `>=` (lower).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub rate: f64,
    pub constant: f64,
    pub direction: Direction,
}

impl DecayBound {
    pub fn value(&self, t: f64) -> f64 {
        self.constant * (-self.rate * t).exp()
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Largest signed relative violation per bound; non-positive means the
    /// bound held everywhere.
    pub violations: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub const BOUND_TOLERANCE: f64 = 1e-9;

pub fn verify_bounds(trajectories: &[TrajectoryNorms], bounds: &[DecayBound]) -> BoundReport {
    verify_bounds_with(trajectories, bounds, BOUND_TOLERANCE)
}

pub fn verify_bounds_with(trajectories: &[TrajectoryNorms], bounds: &[DecayBound], tolerance: f64) -> BoundReport {
    let violations: Vec<f64> = bounds
        .iter()
        .map(|b| {
            trajectories
                .iter()
                .flat_map(|tr| {
                    tr.times.iter().zip(&tr.norms).map(move |(&t, &norm)| {
                        let limit = b.value(t) * tr.initial;
                        let gap = match b.direction {
                            Direction::Upper => norm - limit,
                            Direction::Lower => limit - norm,
                        };
                        gap / limit.max(f64::MIN_POSITIVE)
                    })
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let pass = violations.iter().all(|&v| v <= tolerance);
    BoundReport {
        violations,
        tolerance,
        pass,
    }
}

/// Time grid on `[0, t_max]`: geometric points near zero, a uniform part,
/// and the `extra` points (e.g. known sharpness times), sorted and deduped.
pub fn time_grid(t_max: f64, n_linear: usize, n_geometric: usize, extra: &[f64]) -> Vec<f64> {
    let mut ts = vec![0.0];
    if t_max > 0.0 {
        let first = t_max * 1e-6;
        let last = t_max / n_linear.max(1) as f64;
        if n_geometric > 1 && last > first {
            let ratio = (last / first).powf(1.0 / (n_geometric - 1) as f64);
            ts.extend((0..n_geometric).map(|i| first * ratio.powi(i as i32)));
        }
        ts.extend((1..=n_linear).map(|i| t_max * i as f64 / n_linear as f64));
    }
    ts.extend(extra.iter().copied().filter(|&t| (0.0..=t_max).contains(&t)));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * t_max.max(1.0));
    ts
}
