//! File formats and the commands behind the `hypodecay` binary.
//!
//! Matrices are read from JSON objects `{"n": 2, "re": [[..], ..], "im": [[..], ..]}`
//! with `im` optional. Analysis results are JSON tagged with
//! [`SCHEMA`]; curves are CSV with a header row and 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::condition::{minimize_kappa_2d, minimize_kappa_weights_seeded};
use crate::family::{family_envelope, upper_bound_constant};
use crate::goldstein_taylor::{verify_gt_bound, GtReport, InitialDatum};
use crate::lyapunov::{build_weighted_p, certificate_from_p_with};
use crate::propagator::{exact_solution, rk4_oracle};
use crate::sharp::{envelope_curves_of_form, sharp_constant_of_form, unit_datum, Attainment};
use crate::spectral::{canonical_2d_form, classify_stability, eigendecompose_with, CVector, ComplexMatrix};
use crate::{Complex64, Error, Result, Tolerances};

pub const SCHEMA: &str = "hypodecay/1";
/// Relative agreement required between the exact propagator and RK4.
pub const ORACLE_TOLERANCE: f64 = 1e-8;
const RK4_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

fn flatten(n: usize, rows: &[Vec<f64>], what: &str) -> Result<Vec<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("'{what}' is not an {n}x{n} array")));
    }
    Ok(rows.concat())
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.n < 2 || self.n > crate::spectral::MAX_DIM {
            return Err(Error::Dimension(self.n));
        }
        let re = flatten(self.n, &self.re, "re")?;
        let im = self.im.as_ref().map(|im| flatten(self.n, im, "im")).transpose()?;
        ComplexMatrix::from_parts(self.n, &re, im.as_deref())
    }

    pub fn from_matrix(c: &ComplexMatrix) -> Self {
        let n = c.dim();
        let m = c.matrix();
        let rows = |f: fn(&Complex64) -> f64| (0..n).map(|i| (0..n).map(|j| f(&m[(i, j)])).collect()).collect();
        let im: Vec<Vec<f64>> = rows(|z| z.im);
        Self {
            n,
            re: rows(|z| z.re),
            im: im.iter().flatten().any(|v| *v != 0.0).then_some(im),
        }
    }
}

pub fn parse_matrix(json: &str) -> Result<ComplexMatrix> {
    serde_json::from_str::<MatrixFile>(json)?.to_matrix()
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema: &'static str,
    pub n: usize,
    pub mu: f64,
    pub mu_s: f64,
    pub nu: f64,
    pub nu_s: f64,
    pub hypocoercive: bool,
    pub coercive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_sharp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    /// Time at which the sharp constant is attained; `null` when it is only
    /// approached as `t -> infinity`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attained: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_uncertain: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1_at_mu: Option<f64>,
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_equal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_opt: Option<f64>,
    pub weights: Vec<f64>,
    /// Certified constant `sqrt(kappa)` at rate `mu`.
    pub constant: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub tol: f64,
    pub rates: usize,
    pub seed: u64,
    pub oracle: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            rates: crate::family::DEFAULT_RATES,
            seed: 0,
            oracle: false,
        }
    }
}

impl RunOptions {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            residual_relative: self.tol,
            ..Tolerances::default()
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v.unscale(norm)
}

/// Largest relative gap between the exact propagator and RK4 over a few
/// random data and times up to 10.
fn oracle_check(c: &ComplexMatrix, spec: &crate::spectral::SpectralData, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let f0 = random_unit(&mut rng, c.dim());
        for t in [1.0, 4.0, 10.0] {
            let a = exact_solution(spec, &f0, t)?;
            let b = rk4_oracle(c, &f0, t, RK4_STEP)?;
            worst = worst.max((a - &b).norm() / b.norm().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

pub fn analyze(c: &ComplexMatrix, opts: &RunOptions) -> Result<AnalyzeReport> {
    let tols = opts.tolerances();
    let spec = eigendecompose_with(c, &tols)?;
    spec.require_diagonalizable()?;
    if !spec.positive_stable {
        return Err(Error::NotPositiveStable {
            mu: spec.spectral_gap(),
        });
    }
    let st = classify_stability(c, &spec);
    let mut rep = AnalyzeReport {
        schema: SCHEMA,
        n: c.dim(),
        mu: st.mu,
        mu_s: st.mu_s,
        nu: st.nu,
        nu_s: st.nu_s,
        hypocoercive: st.hypocoercive,
        coercive: st.coercive,
        alpha: None,
        case: None,
        c_sharp: None,
        bracket: None,
        attained: None,
        tail_uncertain: None,
        c1_at_mu: None,
        kappa: f64::NAN,
        kappa_equal: None,
        kappa_opt: None,
        weights: Vec::new(),
        constant: f64::NAN,
        residual: f64::NAN,
        oracle_max_rel_error: None,
    };
    let weights = if c.dim() == 2 {
        let form = canonical_2d_form(&spec)?;
        let sharp = sharp_constant_of_form(&form);
        rep.alpha = Some(form.alpha);
        rep.case = Some(sharp.case.name());
        rep.c_sharp = Some(sharp.c_sharp);
        rep.bracket = Some([sharp.bracket.0, sharp.bracket.1]);
        rep.attained = Some(match sharp.attained {
            Attainment::Finite(t) => Some(t),
            Attainment::Asymptotic => None,
        });
        rep.tail_uncertain = Some(sharp.tail_uncertain);
        rep.c1_at_mu = Some(upper_bound_constant(&form, st.mu)?.constant);
        minimize_kappa_2d(&form).0
    } else {
        let search = minimize_kappa_weights_seeded(&spec.left, opts.tol, opts.seed)?;
        rep.kappa_equal = Some(search.kappa_equal);
        rep.kappa_opt = Some(search.kappa);
        search.weights
    };
    let cert = certificate_from_p_with(c, build_weighted_p(&spec, &weights)?, st.mu, &tols)?;
    rep.kappa = cert.p.kappa();
    rep.weights = weights;
    rep.constant = cert.constant;
    rep.residual = cert.residual;
    if opts.oracle {
        let err = oracle_check(c, &spec, opts.seed)?;
        rep.oracle_max_rel_error = Some(err);
        if err > ORACLE_TOLERANCE {
            return Err(Error::SearchFailure(format!(
                "exact and RK4 solutions differ by {err:.3e}"
            )));
        }
    }
    Ok(rep)
}

pub fn analyze_json(c: &ComplexMatrix, opts: &RunOptions) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&analyze(c, opts)?)?;
    s.push('\n');
    Ok(s)
}

fn push_row(out: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn uniform_times(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || points < 2 {
        return Err(Error::InvalidInput("need t_max > 0 and at least two points".into()));
    }
    Ok((0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect())
}

/// CSV of the norm envelopes, the squared best family bounds, the squared
/// sharp bound and optionally squared norms of random unit trajectories.
pub fn envelope_csv(
    c: &ComplexMatrix,
    t_max: f64,
    points: usize,
    trajectories: usize,
    opts: &RunOptions,
) -> Result<String> {
    if c.dim() != 2 {
        return Err(Error::NotTwoByTwo(c.dim()));
    }
    let spec = eigendecompose_with(c, &opts.tolerances())?;
    spec.require_diagonalizable()?;
    let form = canonical_2d_form(&spec)?;
    let times = uniform_times(t_max, points)?;
    let env = envelope_curves_of_form(&form, &times);
    let fam = family_envelope(&form, &times, opts.rates)?;
    let sharp = sharp_constant_of_form(&form);
    let mu = form.eigenvalues.0.re;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let data: Vec<CVector> = (0..trajectories)
        .map(|_| {
            let phi = rng.gen_range(0.0..std::f64::consts::PI);
            let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            unit_datum(phi, theta)
        })
        .collect();
    let mut out = String::from("t,h_minus,h_plus,family_upper,family_lower,sharp_upper");
    for j in 0..trajectories {
        let _ = write!(out, ",traj_{j}");
    }
    out.push('\n');
    let mut worst = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![
            t,
            env.h_minus[i],
            env.h_plus[i],
            fam.upper[i].powi(2),
            fam.lower[i].powi(2),
            sharp.c_sharp.powi(2) * (-2.0 * mu * t).exp(),
        ];
        for f0 in &data {
            let f = exact_solution(&spec, f0, t)?;
            if opts.oracle {
                let g = rk4_oracle(c, f0, t, RK4_STEP)?;
                worst = worst.max((&f - &g).norm() / g.norm().max(f64::MIN_POSITIVE));
            }
            row.push(f.norm_squared());
        }
        push_row(&mut out, &row);
    }
    if worst > ORACLE_TOLERANCE {
        return Err(Error::SearchFailure(format!(
            "exact and RK4 solutions differ by {worst:.3e}"
        )));
    }
    Ok(out)
}

pub struct GtRun {
    pub csv: String,
    pub report: GtReport,
}

impl GtRun {
    pub fn verdict(&self) -> String {
        let r = &self.report;
        if r.trivial {
            return "PASS trivial (zero initial deviation)".into();
        }
        format!(
            "{} max_ratio={:.12} at t={:.6} (bound {:.12})",
            if r.bound_holds { "PASS" } else { "FAIL" },
            r.max_ratio,
            r.argmax_t,
            3f64.sqrt()
        )
    }
}

/// CSV `t, deviation, bound` for the Goldstein-Taylor model.
pub fn gt_run(init: &InitialDatum, t_max: f64, points: usize, modes: usize, grid: usize) -> Result<GtRun> {
    let field = init.build(grid, modes)?;
    let mut times = uniform_times(t_max, points)?;
    if *init == InitialDatum::Sharp {
        let t0 = std::f64::consts::PI / 3f64.sqrt();
        if t0 <= t_max {
            times.push(t0);
            times.sort_by(f64::total_cmp);
            times.dedup();
        }
    }
    let report = verify_gt_bound(&field, &times, modes)?;
    let mut csv = String::from("t,deviation,bound\n");
    for ((t, d), b) in times.iter().zip(&report.deviations).zip(&report.bounds) {
        push_row(&mut csv, &[*t, *d, *b]);
    }
    Ok(GtRun { csv, report })
}
