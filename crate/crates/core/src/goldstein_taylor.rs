//! The two-velocity Goldstein-Taylor model on the torus,
//!
//! ```text
//! d/dt f+ + d/dx f+ = (f- - f+) / 2
//! d/dt f- - d/dx f- = (f+ - f-) / 2
//! ```
//!
//! In the variables `rho = f+ + f-`, `j = f+ - f-` the Fourier mode `k`
//! evolves by `u_k' = -C_k u_k` with `C_k = [[0, ik], [ik, 1]]` and
//! `u_k = (rho_k, j_k)`, where `g_k = (1/N) sum_j g(x_j) exp(-i k x_j)`.
//! Mode coefficients are stored in these unnormalized variables; the steady
//! state of a field with mass `2 pi` has `u_0 = (1, 0)`. Parseval reads
//! `|f - f_inf|^2 = pi sum_k |u_k - u_k_inf|^2`, and
//! [`ModeVector::orthonormal`] gives the coordinates in the orthonormal
//! velocity basis `{(1, 1), (1, -1)} / sqrt(2)`, for which the factor is
//! `2 pi`.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::lyapunov::{certificate_from_p, LyapunovCertificate, LyapunovMatrix};
use crate::spectral::{hermitian_eigen, CMatrix, CVector, ComplexMatrix};
use crate::{Complex64, Error, Result};

pub const MIN_GRID: usize = 8;
pub const MASS_TOLERANCE: f64 = 1e-10;
pub const BOUND_SLACK: f64 = 1e-9;
/// Rate of the slowest nonzero mode.
pub const DECAY_RATE: f64 = 0.5;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn mode_matrix(k: i64) -> ComplexMatrix {
    let ik = cx(0.0, k as f64);
    ComplexMatrix::new(CMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), ik, ik, cx(1.0, 0.0)]))
        .expect("mode matrix is finite")
}

pub fn mode_kappa_closed_form(k: i64) -> f64 {
    let a = 2.0 * k.unsigned_abs() as f64;
    (a + 1.0) / (a - 1.0)
}

/// The equal-weight Lyapunov matrix of mode `k`, `[[1, -i/(2k)], [i/(2k), 1]]`.
pub fn mode_lyapunov_matrix(k: i64) -> Result<LyapunovMatrix> {
    if k == 0 {
        return Err(Error::ZeroMode);
    }
    let h = 1.0 / (2.0 * k as f64);
    LyapunovMatrix::new(CMatrix::from_row_slice(
        2,
        2,
        &[cx(1.0, 0.0), cx(0.0, -h), cx(0.0, h), cx(1.0, 0.0)],
    ))
}

/// Decay certificate of mode `k != 0` at rate `1/2`.
pub fn mode_certificate(k: i64) -> Result<LyapunovCertificate> {
    let p = mode_lyapunov_matrix(k)?;
    certificate_from_p(&mode_matrix(k), p, DECAY_RATE)
}

/// `exp(-C_k t)`. For `k != 0`, `(C_k - 1/2)^2 = -(k^2 - 1/4)`, so the
/// exponential is `e^{-t/2} (cos(wt) - sin(wt)/w (C_k - 1/2))`.
pub fn mode_propagator(k: i64, t: f64) -> CMatrix {
    if k == 0 {
        return CMatrix::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx((-t).exp(), 0.0)]);
    }
    let kf = k as f64;
    let w = (kf * kf - 0.25).sqrt();
    let (cs, sn) = ((w * t).cos(), (w * t).sin() / w);
    let e = (-0.5 * t).exp();
    // C_k - 1/2 = [[-1/2, ik], [ik, 1/2]]
    CMatrix::from_row_slice(
        2,
        2,
        &[
            cx(e * (cs + 0.5 * sn), 0.0),
            cx(0.0, -e * sn * kf),
            cx(0.0, -e * sn * kf),
            cx(e * (cs - 0.5 * sn), 0.0),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
}

impl TorusField {
    pub fn new(f_plus: Vec<f64>, f_minus: Vec<f64>) -> Result<Self> {
        let n = f_plus.len();
        if n != f_minus.len() || n < MIN_GRID || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "grid sizes {} / {} must agree, be even and at least {MIN_GRID}",
                n,
                f_minus.len()
            )));
        }
        if f_plus.iter().chain(&f_minus).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { f_plus, f_minus })
    }

    /// `f+ = f- = 1/2`.
    pub fn steady(n: usize) -> Result<Self> {
        Self::new(vec![0.5; n], vec![0.5; n])
    }

    pub fn grid_size(&self) -> usize {
        self.f_plus.len()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.grid_size();
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    /// `int (f+ + f-) dx`, exact for band-limited fields.
    pub fn mass(&self) -> f64 {
        let h = 2.0 * PI / self.grid_size() as f64;
        h * self.f_plus.iter().zip(&self.f_minus).map(|(a, b)| a + b).sum::<f64>()
    }

    pub fn equilibrium(&self) -> Self {
        let v = self.mass() / (4.0 * PI);
        let n = self.grid_size();
        Self {
            f_plus: vec![v; n],
            f_minus: vec![v; n],
        }
    }

    /// `L^2` distance to the equilibrium of equal mass.
    pub fn deviation_norm(&self) -> f64 {
        let v = self.mass() / (4.0 * PI);
        let h = 2.0 * PI / self.grid_size() as f64;
        let s: f64 = self.f_plus.iter().chain(&self.f_minus).map(|x| (x - v) * (x - v)).sum();
        (h * s).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVector {
    pub k: i64,
    /// `(rho_k, j_k)`.
    pub u: [Complex64; 2],
}

impl ModeVector {
    pub fn orthonormal(&self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [self.u[0] * s, self.u[1] * s]
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_vec(self.u.to_vec())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u[0].norm_sqr() + self.u[1].norm_sqr()
    }

    pub fn evolved(&self, t: f64) -> Self {
        let v = mode_propagator(self.k, t) * self.to_vector();
        Self {
            k: self.k,
            u: [v[0], v[1]],
        }
    }
}

fn check_cutoff(n: usize, cutoff: usize) -> Result<()> {
    if cutoff + 1 > n / 2 {
        return Err(Error::CutoffTooLarge { cutoff, grid: n });
    }
    Ok(())
}

fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Modes `k = -cutoff..=cutoff`, in increasing `k`.
pub fn decompose(field: &TorusField, cutoff: usize) -> Result<Vec<ModeVector>> {
    let n = field.grid_size();
    check_cutoff(n, cutoff)?;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut rho: Vec<Complex64> = field
        .f_plus
        .iter()
        .zip(&field.f_minus)
        .map(|(a, b)| cx(a + b, 0.0))
        .collect();
    let mut j: Vec<Complex64> = field
        .f_plus
        .iter()
        .zip(&field.f_minus)
        .map(|(a, b)| cx(a - b, 0.0))
        .collect();
    fft.process(&mut rho);
    fft.process(&mut j);
    let scale = 1.0 / n as f64;
    let c = cutoff as i64;
    Ok((-c..=c)
        .map(|k| {
            let i = index_of(k, n);
            ModeVector {
                k,
                u: [rho[i] * scale, j[i] * scale],
            }
        })
        .collect())
}

/// Samples `f+-(x_j) = (rho +- j)/2` of the band-limited field with the given
/// modes.
pub fn reconstruct(modes: &[ModeVector], n: usize) -> Result<TorusField> {
    if n < MIN_GRID || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("invalid grid size {n}")));
    }
    let kmax = modes.iter().map(|m| m.k.unsigned_abs() as usize).max().unwrap_or(0);
    check_cutoff(n, kmax)?;
    let mut rho = vec![cx(0.0, 0.0); n];
    let mut j = vec![cx(0.0, 0.0); n];
    for m in modes {
        let i = index_of(m.k, n);
        rho[i] += m.u[0];
        j[i] += m.u[1];
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    ifft.process(&mut rho);
    ifft.process(&mut j);
    TorusField::new(
        rho.iter().zip(&j).map(|(r, s)| 0.5 * (r.re + s.re)).collect(),
        rho.iter().zip(&j).map(|(r, s)| 0.5 * (r.re - s.re)).collect(),
    )
}

pub fn evolve_modes(modes: &[ModeVector], t: f64) -> Vec<ModeVector> {
    modes.par_iter().map(|m| m.evolved(t)).collect()
}

/// Exact solution at time `t` of the model truncated to `|k| <= cutoff`.
pub fn evolve(field: &TorusField, t: f64, cutoff: usize) -> Result<TorusField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput("time must be non-negative".into()));
    }
    let modes = decompose(field, cutoff)?;
    reconstruct(&evolve_modes(&modes, t), field.grid_size())
}

/// `L^2` distance to equilibrium computed from mode coefficients.
pub fn modal_deviation(modes: &[ModeVector]) -> f64 {
    let s: f64 = modes
        .iter()
        .map(|m| if m.k == 0 { m.u[1].norm_sqr() } else { m.norm_sqr() })
        .sum();
    (PI * s).sqrt()
}

#[derive(Debug, Clone)]
pub struct GtReport {
    pub times: Vec<f64>,
    pub deviations: Vec<f64>,
    /// `sqrt(3) exp(-t/2) |f(0) - f_inf|`.
    pub bounds: Vec<f64>,
    pub max_ratio: f64,
    pub argmax_t: f64,
    /// Zero initial deviation; all ratios are undefined and the bound holds.
    pub trivial: bool,
    pub bound_holds: bool,
}

impl GtReport {
    /// Whether the largest ratio comes within relative `factor` of `sqrt(3)`.
    pub fn approaches(&self, factor: f64) -> bool {
        !self.trivial && self.max_ratio >= 3f64.sqrt() * (1.0 - factor)
    }
}

/// Checks `|f(t) - f_inf| <= sqrt(3) exp(-t/2) |f(0) - f_inf|` on `times`.
pub fn verify_gt_bound(field: &TorusField, times: &[f64], cutoff: usize) -> Result<GtReport> {
    let mass = field.mass();
    if (mass - 2.0 * PI).abs() > MASS_TOLERANCE {
        return Err(Error::NotNormalized { mass });
    }
    let modes = decompose(field, cutoff)?;
    let d0 = modal_deviation(&modes);
    let deviations: Vec<f64> = times
        .par_iter()
        .map(|&t| modal_deviation(&evolve_modes(&modes, t)))
        .collect();
    let c = 3f64.sqrt();
    let bounds: Vec<f64> = times.iter().map(|t| c * (-DECAY_RATE * t).exp() * d0).collect();
    let trivial = d0 <= f64::EPSILON * 16.0;
    let (mut max_ratio, mut argmax_t) = (0.0, times.first().copied().unwrap_or(0.0));
    if !trivial {
        for (&t, &d) in times.iter().zip(&deviations) {
            let r = d / ((-DECAY_RATE * t).exp() * d0);
            if r > max_ratio {
                max_ratio = r;
                argmax_t = t;
            }
        }
    }
    Ok(GtReport {
        times: times.to_vec(),
        deviations,
        bounds,
        max_ratio,
        argmax_t,
        trivial,
        bound_holds: trivial || max_ratio <= c * (1.0 + BOUND_SLACK),
    })
}

/// Named initial data for the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialDatum {
    Steady,
    /// `f+ = 1/2 + cos(kx)/4`, `f- = 1/2`.
    Harmonic(i64),
    /// Random band-limited perturbation of the steady state.
    Random(u64),
    /// Steady state plus the top eigenvector of the mode-1 Lyapunov matrix in
    /// modes `+-1`; the ratio reaches `sqrt(3)` at `t = pi/sqrt(3)`.
    Sharp,
}

impl FromStr for InitialDatum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown initial datum '{s}'"));
        match s.split_once(':') {
            None if s == "steady" => Ok(Self::Steady),
            None if s == "sharp" => Ok(Self::Sharp),
            Some(("harmonic", k)) => k.parse().map(Self::Harmonic).map_err(|_| bad()),
            Some(("random", seed)) => seed.parse().map(Self::Random).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

const PERTURBATION: f64 = 0.25;

impl InitialDatum {
    pub fn build(&self, n: usize, cutoff: usize) -> Result<TorusField> {
        check_cutoff(n, cutoff)?;
        match *self {
            Self::Steady => TorusField::steady(n),
            Self::Harmonic(k) => {
                if k == 0 || k.unsigned_abs() as usize > cutoff {
                    return Err(Error::InvalidInput(format!(
                        "harmonic index must satisfy 1 <= |k| <= {cutoff}"
                    )));
                }
                let f_plus = (0..n)
                    .map(|j| 0.5 + PERTURBATION * (k as f64 * 2.0 * PI * j as f64 / n as f64).cos())
                    .collect();
                TorusField::new(f_plus, vec![0.5; n])
            }
            Self::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut modes = vec![ModeVector {
                    k: 0,
                    u: [cx(1.0, 0.0), cx(PERTURBATION * rng.gen_range(-1.0..1.0), 0.0)],
                }];
                for k in 1..=cutoff as i64 {
                    let amp = PERTURBATION / (1.0 + k as f64);
                    let mut draw = || cx(amp * rng.gen_range(-1.0..1.0), amp * rng.gen_range(-1.0..1.0));
                    let u = [draw(), draw()];
                    modes.push(ModeVector { k, u });
                    modes.push(ModeVector {
                        k: -k,
                        u: [u[0].conj(), u[1].conj()],
                    });
                }
                reconstruct(&modes, n)
            }
            Self::Sharp => {
                if cutoff < 1 {
                    return Err(Error::InvalidInput("sharp datum needs cutoff >= 1".into()));
                }
                let p = mode_lyapunov_matrix(1)?;
                let (_, vecs) = hermitian_eigen(&p.p);
                let y = vecs.column(1);
                // fix the phase so that the first component is real
                let ph = y[0].conj() / y[0].norm();
                let u = [y[0] * ph * PERTURBATION, y[1] * ph * PERTURBATION];
                reconstruct(
                    &[
                        ModeVector {
                            k: 0,
                            u: [cx(1.0, 0.0), cx(0.0, 0.0)],
                        },
                        ModeVector { k: 1, u },
                        ModeVector {
                            k: -1,
                            u: [u[0].conj(), u[1].conj()],
                        },
                    ],
                    n,
                )
            }
        }
    }
}
