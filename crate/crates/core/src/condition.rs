//! Condition-number minimization over admissible Lyapunov matrices.
//!
//! In two dimensions the optimum is explicit: equal weights, with
//! `kappa = (1 + alpha) / (1 - alpha)`. In higher dimensions the weights of
//! `W diag(b) W*` are searched with a restarted simplex method in
//! log-coordinates. General admissible matrices are searched through an exact
//! parameterization of the admissible cone when `C` is diagonalizable, and
//! over Cholesky factors with a residual penalty otherwise.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lyapunov::{admissibility_slack, lyapunov_residual, LyapunovMatrix};
use crate::spectral::{
    eigendecompose, hermitian_condition, hermitian_eigen, CMatrix, CVector, Canonical2DForm, ComplexMatrix,
};
use crate::{Error, Result, Tolerances};

pub const WEIGHT_RESTARTS: usize = 20;
pub const RESIDUAL_PENALTY: f64 = 1e6;
const SIMPLEX_SD_TOL: f64 = 1e-14;
const SIMPLEX_MAX_ITERS: u64 = 20_000;
const MAX_POLISH_ROUNDS: usize = 60;

/// Equal weights are optimal for 2x2 systems.
pub fn minimize_kappa_2d(form: &Canonical2DForm) -> (Vec<f64>, f64) {
    let a = form.alpha;
    (vec![1.0, 1.0], (1.0 + a) / (1.0 - a))
}

/// `kappa(W diag(b) W*)`.
pub fn kappa_of_weights(w: &CMatrix, weights: &[f64]) -> f64 {
    let mut wb = w.clone();
    for (j, b) in weights.iter().enumerate() {
        wb.column_mut(j).scale_mut(b.sqrt());
    }
    hermitian_condition(&(&wb * wb.adjoint()))
}

#[derive(Debug, Clone)]
pub struct WeightSearch {
    /// Optimal weights, scaled to small integers when they are that close to
    /// an integer vector, otherwise with `b_1 = 1`.
    pub weights: Vec<f64>,
    pub kappa: f64,
    pub kappa_equal: f64,
}

struct LogWeightCost<'a> {
    w: &'a CMatrix,
}

impl LogWeightCost<'_> {
    fn weights(x: &[f64]) -> Vec<f64> {
        std::iter::once(1.0).chain(x.iter().map(|v| v.exp())).collect()
    }
}

impl CostFunction for LogWeightCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok(kappa_of_weights(self.w, &Self::weights(x)))
    }
}

/// Runs Nelder-Mead from `x0`, restarting from the best point until the cost
/// stops improving.
fn polished_simplex<C>(cost: &C, x0: Vec<f64>, step: f64) -> Result<(Vec<f64>, f64)>
where
    C: CostFunction<Param = Vec<f64>, Output = f64> + Clone,
{
    let mut x = x0;
    let mut fx = cost.cost(&x).map_err(|e| Error::SearchFailure(e.to_string()))?;
    let mut step = step;
    for _ in 0..MAX_POLISH_ROUNDS {
        let mut simplex = vec![x.clone()];
        for i in 0..x.len() {
            let mut v = x.clone();
            v[i] += step;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(SIMPLEX_SD_TOL)
            .map_err(|e| Error::SearchFailure(e.to_string()))?;
        let res = Executor::new(cost.clone(), solver)
            .configure(|s| s.max_iters(SIMPLEX_MAX_ITERS))
            .run()
            .map_err(|e| Error::SearchFailure(e.to_string()))?;
        let state = res.state();
        let (Some(best), best_cost) = (state.best_param.clone(), state.best_cost) else {
            return Err(Error::SearchFailure("simplex produced no iterate".into()));
        };
        if best_cost < fx - 1e-13 * fx.abs().max(1.0) {
            x = best;
            fx = best_cost;
            step = (step * 0.5).max(1e-4);
        } else {
            if best_cost < fx {
                x = best;
                fx = best_cost;
            }
            break;
        }
    }
    Ok((x, fx))
}

impl Clone for LogWeightCost<'_> {
    fn clone(&self) -> Self {
        Self { w: self.w }
    }
}

/// Minimizes `kappa(W diag(b) W*)` over positive weights.
///
/// `w` holds unit-norm eigenvectors of `C*` as columns. The first start is
/// the equal-weight point, so the result never exceeds the equal-weight
/// condition number.
pub fn minimize_kappa_weights(w: &CMatrix, tol: f64) -> Result<WeightSearch> {
    minimize_kappa_weights_seeded(w, tol, 0)
}

pub fn minimize_kappa_weights_seeded(w: &CMatrix, tol: f64, seed: u64) -> Result<WeightSearch> {
    let n = w.ncols();
    if !w.is_square() || n < 2 {
        return Err(Error::InvalidInput("eigenvector matrix must be square".into()));
    }
    let kappa_equal = kappa_of_weights(w, &vec![1.0; n]);
    if !kappa_equal.is_finite() {
        return Err(Error::SearchFailure("eigenvector matrix is singular".into()));
    }
    let cost = LogWeightCost { w };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_x = vec![0.0; n - 1];
    let mut best = kappa_equal;
    for restart in 0..WEIGHT_RESTARTS {
        let x0 = if restart == 0 {
            vec![0.0; n - 1]
        } else {
            (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect()
        };
        let Ok((x, fx)) = polished_simplex(&cost, x0, 0.5) else {
            continue;
        };
        if fx < best {
            best = fx;
            best_x = x;
        }
    }
    if best > kappa_equal + tol {
        return Err(Error::SearchFailure(format!(
            "best kappa {best} exceeds equal-weight kappa {kappa_equal}"
        )));
    }
    Ok(WeightSearch {
        weights: present_weights(&LogWeightCost::weights(&best_x)),
        kappa: best,
        kappa_equal,
    })
}

/// Rescales weights (given with `b_1 = 1`) by the smallest integer factor
/// `m <= 12` that brings every entry within `1e-3` of an integer.
pub fn present_weights(weights: &[f64]) -> Vec<f64> {
    let b1 = weights[0];
    let unit: Vec<f64> = weights.iter().map(|b| b / b1).collect();
    (1..=12)
        .map(|m| m as f64)
        .find(|m| unit.iter().all(|b| (m * b - (m * b).round()).abs() <= 1e-3))
        .map_or(unit.clone(), |m| unit.iter().map(|b| m * b).collect())
}

#[derive(Debug, Clone)]
pub struct AdmissibleSearch {
    pub p: LyapunovMatrix,
    pub kappa: f64,
    pub residual: f64,
}

#[derive(Clone)]
struct CholeskyCost<'a> {
    c: &'a ComplexMatrix,
    rate: f64,
}

/// Parameter layout: `n` log-diagonal entries, then real and imaginary parts
/// of the strictly lower triangle, row by row.
fn unpack_cholesky(n: usize, x: &[f64]) -> CMatrix {
    let mut l = CMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = Complex64::new(x[i].exp(), 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in 0..i {
            l[(i, j)] = Complex64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    &l * l.adjoint()
}

fn pack_cholesky(p: &CMatrix) -> Result<Vec<f64>> {
    let n = p.nrows();
    let l = Cholesky::new(p.clone()).ok_or(Error::NotPositiveDefinite)?.unpack();
    let mut x: Vec<f64> = (0..n).map(|i| l[(i, i)].re.ln()).collect();
    for i in 0..n {
        for j in 0..i {
            x.push(l[(i, j)].re);
            x.push(l[(i, j)].im);
        }
    }
    Ok(x)
}

impl CostFunction for CholeskyCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let p = unpack_cholesky(self.c.dim(), x);
        let (ev, _) = hermitian_eigen(&p);
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if !(lo > 0.0) || !hi.is_finite() {
            return Ok(f64::MAX);
        }
        let m = crate::lyapunov::inequality_matrix(self.c, &p, self.rate);
        let residual = hermitian_eigen(&m).0[0] / hi;
        Ok(hi / lo + RESIDUAL_PENALTY * (-residual).max(0.0))
    }
}

/// Exact parameterization of the admissible cone of a diagonalizable `C`.
///
/// With `C* W = W diag(conj lambda)`, `P = W Q W*` is admissible at `rate`
/// iff `M o Q >= 0` where `M_ij = conj(lambda_i) + lambda_j - 2 rate`.
/// Indices with `Re lambda_i = rate` decouple into a positive diagonal. On
/// the others `Q = (L L*) o K` with the Cauchy kernel `K = 1 / M`, which is
/// positive definite, so every parameter vector gives an admissible `P`.
#[derive(Clone)]
struct ModalCost {
    w: CMatrix,
    w_inv: CMatrix,
    edge: Vec<usize>,
    interior: Vec<usize>,
    kernel: CMatrix,
}

impl ModalCost {
    fn new(c: &ComplexMatrix, rate: f64) -> Option<Self> {
        let spec = eigendecompose(c).ok()?;
        if spec.defective {
            return None;
        }
        let n = c.dim();
        let scale = 1.0 + c.norm2();
        let lam = &spec.eigenvalues;
        let w = spec.left.clone();
        let lam_bar = CMatrix::from_diagonal(&CVector::from_iterator(n, lam.iter().map(|l| l.conj())));
        if (c.adjoint() * &w - &w * lam_bar).norm() > 1e-8 * scale * w.norm() {
            return None;
        }
        let on_edge = |l: &Complex64| (l.re - rate).abs() <= 1e-9 * scale;
        let edge: Vec<usize> = (0..n).filter(|&i| on_edge(&lam[i])).collect();
        let interior: Vec<usize> = (0..n).filter(|&i| !on_edge(&lam[i])).collect();
        if interior.iter().any(|&i| lam[i].re < rate) {
            return None;
        }
        // equal eigenvalues on the edge would couple; keep the generic search for them
        for (a, &i) in edge.iter().enumerate() {
            if edge[a + 1..].iter().any(|&j| (lam[i] - lam[j]).norm() <= 1e-9 * scale) {
                return None;
            }
        }
        let m = interior.len();
        let kernel = CMatrix::from_fn(m, m, |a, b| {
            let (i, j) = (interior[a], interior[b]);
            Complex64::new(1.0, 0.0) / (lam[i].conj() + lam[j] - 2.0 * rate)
        });
        let w_inv = w.clone().try_inverse()?;
        Some(Self {
            w,
            w_inv,
            edge,
            interior,
            kernel,
        })
    }

    fn unpack(&self, x: &[f64]) -> CMatrix {
        let n = self.w.nrows();
        let mut q = CMatrix::zeros(n, n);
        for (k, &i) in self.edge.iter().enumerate() {
            q[(i, i)] = Complex64::new(x[k].exp(), 0.0);
        }
        let r = unpack_cholesky(self.interior.len(), &x[self.edge.len()..]);
        for (a, &i) in self.interior.iter().enumerate() {
            for (b, &j) in self.interior.iter().enumerate() {
                q[(i, j)] = r[(a, b)] * self.kernel[(a, b)];
            }
        }
        let p = &self.w * q * self.w.adjoint();
        (&p + p.adjoint()).scale(0.5)
    }

    fn pack(&self, p: &CMatrix) -> Result<Vec<f64>> {
        let q = &self.w_inv * p * self.w_inv.adjoint();
        let mut x: Vec<f64> = self.edge.iter().map(|&i| q[(i, i)].re.max(1e-300).ln()).collect();
        let m = self.interior.len();
        let mut r = CMatrix::from_fn(m, m, |a, b| {
            q[(self.interior[a], self.interior[b])] / self.kernel[(a, b)]
        });
        r = (&r + r.adjoint()).scale(0.5);
        // a seed on the boundary of the cone gives a singular factor
        let jitter = 1e-10 * (0..m).map(|a| r[(a, a)].re.abs()).sum::<f64>().max(1e-300);
        for a in 0..m {
            r[(a, a)] += Complex64::new(jitter, 0.0);
        }
        x.extend(pack_cholesky(&r)?);
        Ok(x)
    }
}

impl CostFunction for ModalCost {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        let k = hermitian_condition(&self.unpack(x));
        Ok(if k.is_finite() && k > 0.0 { k } else { f64::MAX })
    }
}

/// Searches Hermitian positive definite matrices admissible at `rate` with
/// smaller condition number than `seed`.
///
/// The admissible set is convex, so a final iterate that violates the
/// inequality is blended back towards the (admissible) seed until it holds.
pub fn minimize_kappa_admissible(
    c: &ComplexMatrix,
    rate: f64,
    seed: &LyapunovMatrix,
    tol: f64,
) -> Result<AdmissibleSearch> {
    let n = c.dim();
    if seed.p.nrows() != n {
        return Err(Error::InvalidInput("seed has wrong dimension".into()));
    }
    let tols = Tolerances::default();
    let seed_res = lyapunov_residual(c, seed, rate);
    if seed_res < -admissibility_slack(c, seed, &tols).max(tol * seed.lambda_max) {
        return Err(Error::NotAdmissible {
            rate,
            residual: seed_res,
        });
    }
    let seed_p = seed.p.unscale(seed.lambda_max);
    let found = match ModalCost::new(c, rate) {
        Some(cost) => {
            let (x, _) = polished_simplex(&cost, cost.pack(&seed_p)?, 0.1)?;
            cost.unpack(&x)
        }
        None => {
            let cost = CholeskyCost { c, rate };
            let (x, _) = polished_simplex(&cost, pack_cholesky(&seed_p)?, 0.1)?;
            unpack_cholesky(n, &x)
        }
    };
    let found = found.unscale(hermitian_eigen(&found).0[n - 1]);

    let residual_of = |p: &CMatrix| hermitian_eigen(&crate::lyapunov::inequality_matrix(c, p, rate)).0[0];
    let blend = |s: f64| found.scale(1.0 - s) + seed_p.scale(s);
    let candidate = if residual_of(&found) >= 0.0 {
        found.clone()
    } else {
        // smallest seed fraction restoring admissibility
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if residual_of(&blend(mid)) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        blend(hi)
    };

    let mut best = LyapunovMatrix::new(candidate)?;
    if best.kappa() > seed.kappa() {
        best = LyapunovMatrix::new(seed_p)?;
    }
    let residual = lyapunov_residual(c, &best, rate);
    if residual < -admissibility_slack(c, &best, &tols).max(tol * best.lambda_max) {
        return Err(Error::SearchFailure(format!(
            "final matrix not admissible (residual {residual:.3e})"
        )));
    }
    Ok(AdmissibleSearch {
        kappa: best.kappa(),
        p: best,
        residual,
    })
}
