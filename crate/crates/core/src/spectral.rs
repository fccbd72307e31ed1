//! Dense complex linear algebra for small matrices.
//!
//! Eigenpairs are obtained from a complex Schur decomposition followed by
//! back-substitution on the triangular factor. Right eigenvectors `v_j` of
//! `C` and unit eigenvectors `w_j` of `C*` are returned biorthonormal,
//! `<w_j, v_k> = delta_jk`.

use nalgebra::{linalg::Schur, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result, Tolerances};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

const SCHUR_MAX_ITER: usize = 10_000;

/// Square complex matrix with `2 <= n <= 16` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(CMatrix);

impl ComplexMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::Dimension(n));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Builds a real matrix from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows have unequal length".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    /// Builds a matrix from row-major real and imaginary parts.
    pub fn from_parts(n: usize, re: &[f64], im: Option<&[f64]>) -> Result<Self> {
        if re.len() != n * n || im.is_some_and(|im| im.len() != n * n) {
            return Err(Error::InvalidInput(format!("expected {} entries per part", n * n)));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(re[i * n + j], im.map_or(0.0, |im| im[i * n + j]))
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> CMatrix {
        self.0.adjoint()
    }

    /// Hermitian part `(C + C*) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (&self.0 + self.0.adjoint()).scale(0.5)
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        spectral_norm(&self.0)
    }
}

/// Eigen-structure of a [`ComplexMatrix`].
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ordered by increasing real part, ties by increasing imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Columns `v_j` with `C v_j = lambda_j v_j`, scaled so `<w_j, v_j> = 1`.
    pub right: CMatrix,
    /// Columns `w_j` with `C* w_j = conj(lambda_j) w_j`, unit norm.
    pub left: CMatrix,
    pub defective: bool,
    pub positive_stable: bool,
    /// Condition number of the column-normalized eigenvector matrix.
    pub eigvec_condition: f64,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn right_vector(&self, j: usize) -> CVector {
        self.right.column(j).into_owned()
    }

    pub fn left_vector(&self, j: usize) -> CVector {
        self.left.column(j).into_owned()
    }

    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn require_diagonalizable(&self) -> Result<()> {
        if self.defective {
            Err(Error::Defective {
                condition: self.eigvec_condition,
            })
        } else {
            Ok(())
        }
    }
}

/// Extreme eigenvalue data of `C` and of its Hermitian part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub mu: f64,
    pub nu: f64,
    pub mu_s: f64,
    pub nu_s: f64,
    pub hypocoercive: bool,
    pub coercive: bool,
}

/// Coordinates in which the eigenvectors of `C*` read `w1 = (1, 0)` and
/// `w2 = (alpha, sqrt(1 - alpha^2))`.
#[derive(Debug, Clone)]
pub struct Canonical2DForm {
    pub alpha: f64,
    /// Columns form the new orthonormal basis; new coordinates are `U* x`.
    pub unitary: CMatrix,
    pub eigenvalues: (Complex64, Complex64),
    pub w1_new: CVector,
    pub w2_new: CVector,
}

impl Canonical2DForm {
    pub fn from_parts(alpha: f64, lambda1: Complex64, lambda2: Complex64) -> Self {
        let s = (1.0 - alpha * alpha).sqrt();
        Self {
            alpha,
            unitary: CMatrix::identity(2, 2),
            eigenvalues: (lambda1, lambda2),
            w1_new: CVector::from_vec(vec![c(1.0), c(0.0)]),
            w2_new: CVector::from_vec(vec![c(alpha), c(s)]),
        }
    }

    /// The system matrix expressed in canonical coordinates,
    /// `(W*)^-1 diag(lambda) W*` with `W = [[1, alpha], [0, sqrt(1 - alpha^2)]]`.
    pub fn model_matrix(&self) -> CMatrix {
        let a = self.alpha;
        let s = (1.0 - a * a).sqrt();
        let (l1, l2) = self.eigenvalues;
        // W* = [[1, 0], [a, s]], (W*)^-1 = [[1, 0], [-a/s, 1/s]]
        let d = l2 - l1;
        CMatrix::from_row_slice(2, 2, &[l1, c(0.0), d * (a / s), l2])
    }

    /// Stability data of the model matrix, identical to that of the original
    /// matrix by unitary invariance.
    pub fn stability(&self) -> StabilityReport {
        let m = self.model_matrix();
        let cs = (&m + m.adjoint()).scale(0.5);
        let (ev, _) = hermitian_eigen(&cs);
        let (l1, l2) = self.eigenvalues;
        let mu = l1.re.min(l2.re);
        let nu = l1.re.max(l2.re);
        StabilityReport {
            mu,
            nu,
            mu_s: ev[0],
            nu_s: ev[1],
            hypocoercive: mu > 0.0,
            coercive: ev[0] > 0.0,
        }
    }

    /// Maps a vector from original to canonical coordinates.
    pub fn to_canonical(&self, x: &CVector) -> CVector {
        self.unitary.adjoint() * x
    }

    pub fn from_canonical(&self, y: &CVector) -> CVector {
        &self.unitary * y
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and unit eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), idx.len(), |r, k| eig.eigenvectors[(r, idx[k])]);
    (values, vectors)
}

/// Condition number `lambda_max / lambda_min` of a Hermitian positive definite
/// matrix; infinite when not positive definite.
pub fn hermitian_condition(m: &CMatrix) -> f64 {
    let (ev, _) = hermitian_eigen(m);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn eigendecompose(c: &ComplexMatrix) -> Result<SpectralData> {
    eigendecompose_with(c, &Tolerances::default())
}

pub fn eigendecompose_with(c: &ComplexMatrix, tol: &Tolerances) -> Result<SpectralData> {
    let (lambdas, right_raw) = eigenpairs(c.matrix())?;
    let n = lambdas.len();
    let order = spectral_order(&lambdas, tol.eigen_relative);
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| lambdas[i]).collect();
    let mut v = CMatrix::from_fn(n, n, |r, k| right_raw[(r, order[k])]);

    let condition = condition_number(&v);
    let mut defective = !(condition <= tol.defect_condition);

    let left = match (!defective).then(|| v.clone().try_inverse()).flatten() {
        Some(inv) => {
            // rows of V^-1 are w_j^*; normalize w_j and rescale v_j
            let mut w = inv.adjoint();
            for j in 0..n {
                let norm = w.column(j).norm();
                w.column_mut(j).unscale_mut(norm);
                v.column_mut(j).scale_mut(norm);
            }
            w
        }
        None => {
            defective = true;
            left_by_matching(c, &eigenvalues)?
        }
    };

    Ok(SpectralData {
        positive_stable: eigenvalues.iter().all(|l| l.re > 0.0),
        eigenvalues,
        right: v,
        left,
        defective,
        eigvec_condition: condition,
    })
}

/// Eigenvectors of `C*` computed independently, used when `V` is singular.
fn left_by_matching(c: &ComplexMatrix, eigenvalues: &[Complex64]) -> Result<CMatrix> {
    let (mu, w_raw) = eigenpairs(&c.adjoint())?;
    let n = eigenvalues.len();
    let mut used = vec![false; n];
    let mut w = CMatrix::zeros(n, n);
    for (j, l) in eigenvalues.iter().enumerate() {
        let best = (0..n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| (mu[a] - l.conj()).norm().total_cmp(&(mu[b] - l.conj()).norm()))
            .expect("unmatched eigenvalue");
        used[best] = true;
        w.set_column(j, &w_raw.column(best));
    }
    Ok(w)
}

/// Unordered eigenvalues and unit right eigenvectors.
fn eigenpairs(m: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::NonConvergence)?;
    let (q, t) = schur.unpack();
    let lambdas: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let small = 64.0 * f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);

    let mut vectors = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut x = CVector::zeros(n);
        x[k] = c(1.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
            let denom = t[(i, i)] - lambdas[k];
            x[i] = if denom.norm() > small {
                -s / denom
            } else if s.norm() <= small * x.norm() {
                // repeated eigenvalue with decoupled eigenspace
                c(0.0)
            } else {
                // coupled repeated eigenvalue: a Jordan block; the huge entry
                // makes the eigenvector matrix ill-conditioned
                -s / small
            };
        }
        let v = &q * x;
        let norm = v.norm();
        vectors.set_column(k, &v.unscale(norm));
    }
    Ok((lambdas, vectors))
}

/// Index order by increasing real part; real parts within `rel` of the
/// cluster head count as ties and are ordered by imaginary part.
fn spectral_order(lambdas: &[Complex64], rel: f64) -> Vec<usize> {
    let scale = lambdas
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..lambdas.len()).collect();
    idx.sort_by(|&a, &b| lambdas[a].re.total_cmp(&lambdas[b].re));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let head = lambdas[idx[start]].re;
        let mut end = start + 1;
        while end < idx.len() && lambdas[idx[end]].re - head <= rel * scale {
            end += 1;
        }
        let mut cluster = idx[start..end].to_vec();
        cluster.sort_by(|&a, &b| lambdas[a].im.total_cmp(&lambdas[b].im));
        out.extend(cluster);
        start = end;
    }
    out
}

fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn classify_stability(c: &ComplexMatrix, spec: &SpectralData) -> StabilityReport {
    let (ev, _) = hermitian_eigen(&c.hermitian_part());
    let mu = spec.spectral_gap();
    let nu = spec.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let mu_s = ev[0];
    StabilityReport {
        mu,
        nu,
        mu_s,
        nu_s: ev[ev.len() - 1],
        hypocoercive: mu > 0.0,
        coercive: mu_s > 0.0,
    }
}

/// Modulus of the normalized inner product of two vectors.
pub fn alpha_overlap(v1: &CVector, v2: &CVector) -> Result<f64> {
    let n1 = v1.norm();
    let n2 = v2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((v1.dotc(v2).norm() / (n1 * n2)).min(1.0))
}

pub fn canonical_2d_form(spec: &SpectralData) -> Result<Canonical2DForm> {
    if spec.dim() != 2 {
        return Err(Error::NotTwoByTwo(spec.dim()));
    }
    spec.require_diagonalizable()?;
    let w1 = spec.left_vector(0);
    let w2 = spec.left_vector(1);
    let overlap = w1.dotc(&w2);
    let alpha = overlap.norm().min(1.0);
    let phase = if alpha > 0.0 { overlap.conj() / alpha } else { c(1.0) };
    let w2 = w2 * phase;
    let s = (1.0 - alpha * alpha).sqrt();
    let e2 = (&w2 - &w1 * c(alpha)).unscale(s);
    let mut unitary = CMatrix::zeros(2, 2);
    unitary.set_column(0, &w1);
    unitary.set_column(1, &e2);
    let w1_new = unitary.adjoint() * &w1;
    let w2_new = unitary.adjoint() * &w2;
    Ok(Canonical2DForm {
        alpha,
        unitary,
        eigenvalues: (spec.eigenvalues[0], spec.eigenvalues[1]),
        w1_new,
        w2_new,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_5_2() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, -1.0], &[1.0, 0.0]]).unwrap()
    }

    fn example_5_3() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.95, -0.3], &[0.3, -0.05]]).unwrap()
    }

    #[test]
    fn diagonal_matrix_has_canonical_left_vectors() {
        let c = ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]).unwrap();
        let spec = eigendecompose(&c).unwrap();
        for (j, l) in spec.eigenvalues.iter().enumerate() {
            assert_abs_diff_eq!(l.re, (j + 1) as f64, epsilon = 1e-14);
            let w = spec.left_vector(j);
            assert_abs_diff_eq!(w[j].norm(), 1.0, epsilon = 1e-14);
        }
        assert!(!spec.defective);
        assert!(spec.positive_stable);
    }

    #[test]
    fn identity_is_not_defective() {
        let c = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let spec = eigendecompose(&c).unwrap();
        assert!(!spec.defective);
        assert_abs_diff_eq!(spec.eigenvalues[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.eigenvalues[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jordan_block_is_defective() {
        let c = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let spec = eigendecompose(&c).unwrap();
        assert!(spec.defective);
        assert!(matches!(canonical_2d_form(&spec), Err(Error::Defective { .. })));
    }

    #[test]
    fn rotation_example_eigenvalues() {
        let spec = eigendecompose(&example_5_2()).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        // equal real parts: ordered by imaginary part
        assert_abs_diff_eq!(spec.eigenvalues[0].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[0].im, -r3, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1].im, r3, epsilon = 1e-14);
    }

    #[test]
    fn eigen_invariants_hold() {
        let c = example_5_3();
        let spec = eigendecompose(&c).unwrap();
        let scale = c.norm2();
        for j in 0..2 {
            let v = spec.right_vector(j);
            let w = spec.left_vector(j);
            let l = spec.eigenvalues[j];
            assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-12);
            assert!((c.matrix() * &v - &v * l).norm() <= 1e-10 * scale * v.norm());
            assert!((c.adjoint() * &w - &w * l.conj()).norm() <= 1e-10 * scale);
            for k in 0..2 {
                let ip = w.dotc(&spec.right_vector(k));
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip.re, expect, epsilon = 1e-10);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn stability_of_rotation_example() {
        let c = example_5_2();
        let r = classify_stability(&c, &eigendecompose(&c).unwrap());
        assert_abs_diff_eq!(r.mu, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.mu_s, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nu_s, 1.0, epsilon = 1e-14);
        assert!(r.hypocoercive && !r.coercive);
    }

    #[test]
    fn stability_of_real_distinct_example() {
        let c = example_5_3();
        let r = classify_stability(&c, &eigendecompose(&c).unwrap());
        assert_abs_diff_eq!(r.mu, 0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nu, 0.85, epsilon = 1e-14);
        assert_abs_diff_eq!(r.mu_s, -0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nu_s, 0.95, epsilon = 1e-14);
    }

    #[test]
    fn hermitian_matrix_stability_extremes_coincide() {
        let c = ComplexMatrix::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        let r = classify_stability(&c, &eigendecompose(&c).unwrap());
        assert_abs_diff_eq!(r.mu, r.mu_s, epsilon = 1e-13);
        assert_abs_diff_eq!(r.nu, r.nu_s, epsilon = 1e-13);
        assert!(r.coercive);
    }

    #[test]
    fn canonical_form_alpha_values() {
        let f = canonical_2d_form(&eigendecompose(&example_5_2()).unwrap()).unwrap();
        assert_abs_diff_eq!(f.alpha, 0.5, epsilon = 1e-13);
        let f = canonical_2d_form(&eigendecompose(&example_5_3()).unwrap()).unwrap();
        assert_abs_diff_eq!(f.alpha, 0.6, epsilon = 1e-13);
        let normal = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[2.0, 1.0]]).unwrap();
        let f = canonical_2d_form(&eigendecompose(&normal).unwrap()).unwrap();
        assert_abs_diff_eq!(f.alpha, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn canonical_form_shape_and_model_matrix() {
        let c = example_5_2();
        let f = canonical_2d_form(&eigendecompose(&c).unwrap()).unwrap();
        assert_abs_diff_eq!(f.w1_new[0].re, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(f.w1_new[1].norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(f.w2_new[0].re, f.alpha, epsilon = 1e-13);
        assert_abs_diff_eq!(f.w2_new[0].im, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(f.w2_new[1].re, (1.0 - f.alpha * f.alpha).sqrt(), epsilon = 1e-13);
        let transformed = f.unitary.adjoint() * c.matrix() * &f.unitary;
        assert!((transformed - f.model_matrix()).norm() < 1e-13);
        let s = f.stability();
        assert_abs_diff_eq!(s.mu_s, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn overlap_edge_cases() {
        let e0 = CVector::from_vec(vec![c(1.0), c(0.0)]);
        let e1 = CVector::from_vec(vec![c(0.0), c(1.0)]);
        assert_eq!(alpha_overlap(&e0, &e1).unwrap(), 0.0);
        let v = CVector::from_vec(vec![Complex64::new(1.0, 2.0), c(-3.0)]);
        assert_abs_diff_eq!(alpha_overlap(&v, &v).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(alpha_overlap(&v, &CVector::zeros(2)), Err(Error::ZeroVector)));
    }

    #[test]
    fn mode_one_right_vectors_overlap_half() {
        // C_1* = [[0, -i], [-i, 1]]: eigenvectors of C_1 computed by hand,
        // lambda = 1/2 -+ i sqrt(3)/2, v = (i, lambda) up to scale
        let r3 = 3f64.sqrt() / 2.0;
        let l1 = Complex64::new(0.5, -r3);
        let l2 = Complex64::new(0.5, r3);
        let i = Complex64::i();
        // C v = lambda v with C = [[0, i], [i, 1]]: i v2 = lambda v1
        let v1 = CVector::from_vec(vec![i, l1]);
        let v2 = CVector::from_vec(vec![i, l2]);
        assert_abs_diff_eq!(alpha_overlap(&v1, &v2).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            ComplexMatrix::new(CMatrix::zeros(1, 1)),
            Err(Error::Dimension(1))
        ));
        assert!(matches!(
            ComplexMatrix::new(CMatrix::zeros(17, 17)),
            Err(Error::Dimension(17))
        ));
        assert!(ComplexMatrix::new(CMatrix::zeros(2, 3)).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(ComplexMatrix::new(m), Err(Error::NonFinite)));
    }
}
