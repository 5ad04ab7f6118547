//! Complex dense linear algebra and randomness primitives.
//!
//! Matrices are [`ndarray::Array2`] of `Complex64` in row-major layout.
//! Factorizations are delegated to LAPACK (through ndarray-linalg where it
//! has a binding, through thin LAPACK shims where it does not); the contracts
//! here are residual bounds, not algorithms.
//!
//! Randomness flows through [`RngStream`]: a counter-based generator keyed by
//! `(seed, stream_index)`. Identical keys reproduce identical draw sequences
//! and distinct stream indices give statistically independent streams, which
//! is what makes every sampler in this crate a deterministic function of its
//! stream.

mod lapack;

use ndarray::Array2;
use ndarray_linalg::{Determinant, EigVals, Inverse, QRSquare, SVD};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense square-or-rectangular complex matrix.
pub type ComplexMatrix = Array2<Complex64>;

/// Unitarity tolerance for sampled and factored unitary matrices.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Relative residual tolerance for eigenvalue-type factorizations.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
/// Relative smallest-singular-value threshold below which a matrix is
/// treated as singular.
pub const SINGULARITY_RTOL: f64 = 1e-12;

/// A point of the extended complex plane (the sphere chart).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtendedComplex::Finite(z) => Some(z),
            ExtendedComplex::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, ExtendedComplex::Infinity)
    }
}

/// Reproducible random stream keyed by `(seed, stream_index)`.
///
/// Backed by ChaCha8, whose 64-bit stream parameter guarantees that distinct
/// stream indices yield independent sequences. Monte Carlo drivers assign one
/// stream per trial; retries after degenerate draws move to a derived stream
/// in the high bits so they can never collide with trial indices.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh stream for retrying a degenerate draw. Trial indices stay below
    /// 2^40, so the retry space is disjoint from them.
    pub fn retry_stream(&self, attempt: u64) -> Self {
        Self::new(self.seed, self.stream ^ ((attempt + 1) << 40))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// One standard complex Gaussian: density `exp(-|z|^2)/pi`, so the real and
/// imaginary parts are independent centered normals of variance 1/2 and
/// `E|g|^2 = 1`.
pub fn sample_complex_gaussian(rng: &mut RngStream) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(
        x * std::f64::consts::FRAC_1_SQRT_2,
        y * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// `n x n` matrix of i.i.d. standard complex Gaussians.
pub fn sample_ginibre_matrix(n: usize, rng: &mut RngStream) -> ComplexMatrix {
    assert!(n >= 1, "matrix size must be positive");
    let entries: Vec<Complex64> = (0..n * n).map(|_| sample_complex_gaussian(rng)).collect();
    Array2::from_shape_vec((n, n), entries).expect("shape matches entry count")
}

/// Haar-distributed `n x n` unitary matrix.
///
/// QR of a Ginibre matrix with the triangular factor's diagonal rotated to
/// the positive real axis. Without that phase correction the QR output is
/// not Haar and would bias every downstream statistic.
pub fn sample_haar_unitary(n: usize, rng: &mut RngStream) -> ComplexMatrix {
    let g = sample_ginibre_matrix(n, rng);
    let (q, r) = g.qr_square().expect("QR of a finite matrix");
    let mut u = q;
    for j in 0..n {
        let d = r[[j, j]];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[[i, j]] *= phase;
        }
    }
    u
}

fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    Ok(rows)
}

/// Eigenvalues with multiplicity.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    ensure_square(m)?;
    let vals = m.eigvals().map_err(|_| Error::Solver {
        routine: "zgeev",
        info: -1,
    })?;
    Ok(vals.to_vec())
}

/// Generalized eigenvalues of the pencil `(A, B)`: the `z` with
/// `det(A - zB) = 0`, equivalently `det(zB - A) = 0`. Eigenvalues at
/// infinity (`beta = 0`) are reported as [`ExtendedComplex::Infinity`].
pub fn generalized_eigenvalues(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<Vec<ExtendedComplex>> {
    let n = ensure_square(a)?;
    let nb = ensure_square(b)?;
    if n != nb {
        return Err(Error::Dimension(format!(
            "pencil sizes differ: {n} vs {nb}"
        )));
    }
    let mut abuf: Vec<Complex64> = a.iter().copied().collect();
    let mut bbuf: Vec<Complex64> = b.iter().copied().collect();
    let pairs = lapack::zggev_pairs(&mut abuf, &mut bbuf, n)?;
    let mut out = Vec::with_capacity(n);
    for (index, (alpha, beta)) in pairs.into_iter().enumerate() {
        if alpha.norm() == 0.0 && beta.norm() == 0.0 {
            return Err(Error::DegeneratePencil { index });
        }
        let ratio = alpha / beta;
        if beta.norm() == 0.0 || !ratio.re.is_finite() || !ratio.im.is_finite() {
            out.push(ExtendedComplex::Infinity);
        } else {
            out.push(ExtendedComplex::Finite(ratio));
        }
    }
    Ok(out)
}

/// Schur factorization `M = U T U*` with `U` unitary and `T` upper
/// triangular; the diagonal of `T` is the eigenvalue multiset.
pub fn schur_decompose(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = ensure_square(m)?;
    // LAPACK wants column-major; transpose in, transpose out.
    let mut a_cm: Vec<Complex64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            a_cm.push(m[[i, j]]);
        }
    }
    let vs_cm = lapack::zgees_schur(&mut a_cm, n)?;
    let mut t = Array2::zeros((n, n));
    let mut u = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            t[[i, j]] = a_cm[j * n + i];
            u[[i, j]] = vs_cm[j * n + i];
        }
    }
    Ok((u, t))
}

/// Ascending coefficients `a_0..a_n` of `det(zI + M)`, so `a_n = 1` and
/// `a_0 = det(M)`.
///
/// Small matrices go through the Faddeev-LeVerrier trace recurrence, which
/// touches no eigenvalue machinery and therefore stays independent of the
/// root-expansion cross-checks. Beyond [`FADDEEV_LEVERRIER_MAX`] the
/// recurrence is both O(n^4) and numerically fragile, so the coefficients
/// are expanded from the eigenvalue multiset instead.
pub fn char_poly_coefficients(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = ensure_square(m)?;
    if n <= FADDEEV_LEVERRIER_MAX {
        faddeev_leverrier(m)
    } else {
        let lambda = eigenvalues(m)?;
        Ok(poly_from_roots_neg(&lambda))
    }
}

/// Size limit for the direct trace recurrence in [`char_poly_coefficients`].
pub const FADDEEV_LEVERRIER_MAX: usize = 64;

fn faddeev_leverrier(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    // det(zI + M) = det(zI - A) with A = -M.
    let a = m.mapv(|v| -v);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut mk = a.clone();
    for k in 1..=n {
        if k > 1 {
            mk = matmul(&a, &mk);
        }
        let ck = -trace(&mk) / (k as f64);
        coeffs[n - k] = ck;
        if k < n {
            for i in 0..n {
                mk[[i, i]] += ck;
            }
        }
    }
    Ok(coeffs)
}

/// Ascending coefficients of `prod_i (z + r_i)`.
fn poly_from_roots_neg(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (j, &c) in coeffs.iter().enumerate() {
            next[j] += c * r;
            next[j + 1] += c;
        }
        coeffs = next;
    }
    coeffs
}

/// Roots of the polynomial with ascending coefficients `coeffs`, via the
/// eigenvalues of its companion matrix. Trailing coefficients that are
/// negligible against the largest one are stripped first.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidData(
            "zero polynomial has no isolated roots".into(),
        ));
    }
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree].norm() <= 1e-14 * scale {
        degree -= 1;
    }
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    let mut companion: ComplexMatrix = Array2::zeros((degree, degree));
    for i in 1..degree {
        companion[[i, i - 1]] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[[i, degree - 1]] = -coeffs[i] / lead;
    }
    eigenvalues(&companion)
}

/// Determinant through LU factorization.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    ensure_square(m)?;
    m.det().map_err(|_| Error::Solver {
        routine: "zgetrf",
        info: -1,
    })
}

/// Matrix inverse through LU factorization.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    m.inv().map_err(|_| Error::Solver {
        routine: "zgetri",
        info: -1,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (_, s, _) = m.svd(false, false).map_err(|_| Error::Solver {
        routine: "zgesvd",
        info: -1,
    })?;
    let mut v = s.to_vec();
    v.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    Ok(v)
}

/// `A B` through BLAS.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "inner dimensions must agree");
    let abuf: Vec<Complex64> = a.iter().copied().collect();
    let bbuf: Vec<Complex64> = b.iter().copied().collect();
    let cbuf = lapack::zgemm_row_major(&abuf, &bbuf, m, k, n);
    Array2::from_shape_vec((m, n), cbuf).expect("gemm output shape")
}

/// Conjugate transpose.
pub fn conj_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = m.dim();
    let mut out = Array2::zeros((cols, rows));
    for i in 0..rows {
        for j in 0..cols {
            out[[j, i]] = m[[i, j]].conj();
        }
    }
    out
}

pub fn identity(n: usize) -> ComplexMatrix {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diag().sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `max |(U*U - I)_{ij}|`, the unitarity defect.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    let prod = matmul(&conj_transpose(u), u);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((prod[[i, j]] - target).norm());
        }
    }
    worst
}

/// JSON image of a matrix: `{"rows":r,"cols":c,"re":[...],"im":[...]}` in
/// row-major order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|v| v.re).collect(),
            im: m.iter().map(|v| v.im).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<ComplexMatrix> {
        if j.rows == 0 || j.cols == 0 {
            return Err(Error::InvalidData(
                "matrix dimensions must be positive".into(),
            ));
        }
        if j.re.len() != j.rows * j.cols || j.im.len() != j.rows * j.cols {
            return Err(Error::InvalidData(format!(
                "entry count {}/{} does not match {}x{}",
                j.re.len(),
                j.im.len(),
                j.rows,
                j.cols
            )));
        }
        let entries: Vec<Complex64> =
            j.re.iter()
                .zip(&j.im)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect();
        if entries
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidData("matrix entries must be finite".into()));
        }
        Array2::from_shape_vec((j.rows, j.cols), entries)
            .map_err(|e| Error::InvalidData(e.to_string()))
    }
}

#[cfg(test)]
mod tests;
