//! Power-series coefficients of matrix Blaschke-type ratios.
//!
//! For a square invertible `V` and `f(z) = det(zI + V)/det(I + zV*)`, the
//! derivatives at the origin admit a cycle-sum expansion
//!
//! ```text
//! f^(k)(0) = det(V) sum_{types of S_k} sign * count * prod_j d_j^{m_j},
//! d_j = Tr(V^-j) - Tr((V*)^j),
//! ```
//!
//! where the sum over the symmetric group has been grouped by cycle type
//! (integer partition), shrinking k! terms to p(k). An independent route to
//! the same numbers divides the characteristic polynomial of `V` by the
//! reversed one of `V*` as truncated series; the two must agree to high
//! relative accuracy, which is the central cross-check of this module.
//!
//! [`det_series`] expands determinants of matrices with truncated-series
//! entries, which is the limit object the scaled ratio coefficients converge
//! to when `V` is a large truncated unitary.

use ndarray::Array2;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    char_poly_coefficients, determinant, eigenvalues, singular_values, ComplexMatrix,
    SINGULARITY_RTOL,
};

/// Combinatorial guard on derivative order.
pub const MAX_DERIVATIVE_ORDER: usize = 64;
/// Guard on the Leibniz expansion size in [`det_series`].
pub const MAX_DET_SERIES_DIM: usize = 8;

/// Coefficients `c_0..c_K` of a power series cut at order `K`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    /// Wraps ascending coefficients; at least one, all finite.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidData(
                "a series needs at least the constant term".into(),
            ));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidData(
                "series coefficients must be finite".into(),
            ));
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        TruncatedSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Same series viewed at a different truncation order. Extending pads
    /// zeros, which is exact for polynomial data.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        coeffs.truncate(order + 1);
        TruncatedSeries { coeffs }
    }

    /// Product truncated at the smaller operand order.
    pub fn mul(&self, rhs: &TruncatedSeries) -> Self {
        let order = self.order().min(rhs.order());
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        for i in 0..=order {
            let a = self.coeff(i);
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..=order - i {
                coeffs[i + j] += a * rhs.coeff(j);
            }
        }
        TruncatedSeries { coeffs }
    }

    pub fn add(&self, rhs: &TruncatedSeries) -> Self {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Multiplicative inverse as a truncated series; the constant term must
    /// be nonzero.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.norm() == 0.0 {
            return Err(Error::Domain(
                "series with zero constant term has no inverse".into(),
            ));
        }
        let order = self.order();
        let mut inv = vec![Complex64::new(0.0, 0.0); order + 1];
        inv[0] = Complex64::new(1.0, 0.0) / c0;
        for k in 1..=order {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeff(j) * inv[k - j];
            }
            inv[k] = -acc / c0;
        }
        Ok(TruncatedSeries { coeffs: inv })
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }
}

impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            order: usize,
            re: &'a [f64],
            im: &'a [f64],
        }
        let re: Vec<f64> = self.coeffs.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.coeffs.iter().map(|c| c.im).collect();
        Wire {
            order: self.order(),
            re: &re,
            im: &im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            order: usize,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let w = Wire::deserialize(deserializer)?;
        if w.re.len() != w.order + 1 || w.im.len() != w.order + 1 {
            return Err(D::Error::custom("coefficient count does not match order"));
        }
        let coeffs =
            w.re.iter()
                .zip(&w.im)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect();
        TruncatedSeries::new(coeffs).map_err(D::Error::custom)
    }
}

/// Conjugacy class of the symmetric group S_k: an integer partition of `k`
/// stored as `(part, multiplicity)` pairs in increasing part order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleType {
    pub k: usize,
    pub multiplicities: Vec<(usize, usize)>,
}

impl CycleType {
    /// Number of cycles `l = sum m_j`.
    pub fn num_cycles(&self) -> usize {
        self.multiplicities.iter().map(|&(_, m)| m).sum()
    }

    /// Permutation sign shared by the class: `(-1)^{k - l}`.
    pub fn sign(&self) -> f64 {
        if (self.k - self.num_cycles()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Number of permutations in the class: `k! / prod_j j^{m_j} m_j!`.
    /// Exact for the sizes the derivative guard admits.
    pub fn permutation_count(&self) -> f64 {
        let mut value = factorial(self.k);
        for &(j, m) in &self.multiplicities {
            value /= (j as f64).powi(m as i32) * factorial(m);
        }
        value
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All cycle types of S_k, i.e. the integer partitions of `k`.
pub fn cycle_types(k: usize) -> Vec<CycleType> {
    assert!(k >= 1, "cycle types need k >= 1");
    let mut out = Vec::new();
    let mut parts = Vec::new();
    collect_partitions(k, k, &mut parts, &mut out);
    out
}

fn collect_partitions(
    remaining: usize,
    max_part: usize,
    parts: &mut Vec<usize>,
    out: &mut Vec<CycleType>,
) {
    if remaining == 0 {
        let k: usize = parts.iter().sum();
        let mut multiplicities: Vec<(usize, usize)> = Vec::new();
        for &p in parts.iter().rev() {
            match multiplicities.last_mut() {
                Some((q, m)) if *q == p => *m += 1,
                _ => multiplicities.push((p, 1)),
            }
        }
        out.push(CycleType { k, multiplicities });
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        parts.push(part);
        collect_partitions(remaining - part, part, parts, out);
        parts.pop();
    }
}

/// `d_j = Tr(V^{-j}) - Tr((V*)^j)` for `j = 1..kmax`.
///
/// Up to [`crate::linalg::FADDEEV_LEVERRIER_MAX`] this is computed from the
/// eigenvalue multiset as `sum_i (lambda_i^{-j} - conj(lambda_i)^j)`, one
/// eigendecomposition instead of `kmax` matrix inversions. Larger matrices
/// take the direct route (one LU inverse plus gemm powers), which is several
/// times cheaper than a nonsymmetric eigendecomposition at that size.
pub fn trace_power_differences(v: &ComplexMatrix, kmax: usize) -> Result<Vec<Complex64>> {
    if v.nrows() <= crate::linalg::FADDEEV_LEVERRIER_MAX {
        trace_power_differences_by_eigenvalues(v, kmax)
    } else {
        trace_power_differences_by_powers(v, kmax)
    }
}

fn trace_power_differences_by_eigenvalues(
    v: &ComplexMatrix,
    kmax: usize,
) -> Result<Vec<Complex64>> {
    let svals = singular_values(v)?;
    let smax = svals[0];
    let smin = *svals.last().expect("nonempty");
    let threshold = SINGULARITY_RTOL * smax;
    if smin <= threshold {
        return Err(Error::Singular { smin, threshold });
    }
    let lambda = eigenvalues(v)?;
    let mut out = Vec::with_capacity(kmax);
    let mut inv_pows: Vec<Complex64> = lambda
        .iter()
        .map(|l| Complex64::new(1.0, 0.0) / l)
        .collect();
    let mut conj_pows: Vec<Complex64> = lambda.iter().map(|l| l.conj()).collect();
    let inv_base = inv_pows.clone();
    let conj_base = conj_pows.clone();
    for j in 0..kmax {
        if j > 0 {
            for (p, b) in inv_pows.iter_mut().zip(&inv_base) {
                *p *= b;
            }
            for (p, b) in conj_pows.iter_mut().zip(&conj_base) {
                *p *= b;
            }
        }
        let d: Complex64 = inv_pows.iter().sum::<Complex64>() - conj_pows.iter().sum::<Complex64>();
        out.push(d);
    }
    Ok(out)
}

fn trace_power_differences_by_powers(v: &ComplexMatrix, kmax: usize) -> Result<Vec<Complex64>> {
    let vinv = crate::linalg::inverse(v)?;
    // Frobenius bound: 1/||V^-1||_F <= smin, so passing this check certifies
    // the singular-value threshold without an SVD at this size.
    let frob = |m: &ComplexMatrix| m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let smin_bound = frob(&vinv).recip();
    let threshold = SINGULARITY_RTOL * frob(v);
    if smin_bound <= threshold {
        return Err(Error::Singular {
            smin: smin_bound,
            threshold,
        });
    }
    let mut out = Vec::with_capacity(kmax);
    let mut vp = v.clone();
    let mut ip = vinv.clone();
    for j in 0..kmax {
        if j > 0 {
            vp = crate::linalg::matmul(&vp, v);
            ip = crate::linalg::matmul(&ip, &vinv);
        }
        let tr_inv: Complex64 = ip.diag().sum();
        let tr_pow: Complex64 = vp.diag().sum();
        out.push(tr_inv - tr_pow.conj());
    }
    Ok(out)
}

/// `f^(k)(0)` for `f(z) = det(zI + V)/det(I + zV*)` by the cycle-sum
/// formula; `k = 0` gives `det(V)`.
pub fn blaschke_derivative(v: &ComplexMatrix, k: usize) -> Result<Complex64> {
    let mut all = blaschke_derivatives(v, k)?;
    Ok(all.pop().expect("orders 0..=k"))
}

/// All derivatives `f^(0)(0)..f^(kmax)(0)` at once; they share one
/// eigendecomposition of `V`.
pub fn blaschke_derivatives(v: &ComplexMatrix, kmax: usize) -> Result<Vec<Complex64>> {
    if kmax > MAX_DERIVATIVE_ORDER {
        return Err(Error::Guard(format!(
            "derivative order {kmax} exceeds the combinatorial guard {MAX_DERIVATIVE_ORDER}"
        )));
    }
    let det_v = determinant(v)?;
    let diffs = if kmax > 0 {
        trace_power_differences(v, kmax)?
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(det_v);
    for k in 1..=kmax {
        let mut sum = Complex64::new(0.0, 0.0);
        for ty in cycle_types(k) {
            let mut term = Complex64::new(ty.sign() * ty.permutation_count(), 0.0);
            for &(j, m) in &ty.multiplicities {
                term *= diffs[j - 1].powi(m as i32);
            }
            sum += term;
        }
        out.push(det_v * sum);
    }
    Ok(out)
}

/// Coefficients of `det(zI + V)/det(I + zV*)` up to order `kmax` by series
/// division: the numerator is the characteristic polynomial of `V`, the
/// denominator its conjugated reversal, whose constant term is exactly 1.
pub fn series_ratio(v: &ComplexMatrix, kmax: usize) -> Result<TruncatedSeries> {
    let numerator = char_poly_coefficients(v)?;
    let n = numerator.len() - 1;
    // det(I + zV*) has ascending coefficients conj(a_{n-j}).
    let denominator: Vec<Complex64> = (0..=n).map(|j| numerator[n - j].conj()).collect();
    let num = TruncatedSeries::new(numerator)?.with_order(kmax);
    let den = TruncatedSeries::new(denominator)?.with_order(kmax);
    Ok(num.mul(&den.invert()?))
}

/// Determinant of a matrix of truncated series by the Leibniz expansion,
/// all products truncated at `kmax`.
pub fn det_series(entries: &Array2<TruncatedSeries>, kmax: usize) -> Result<TruncatedSeries> {
    let (rows, cols) = entries.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if rows > MAX_DET_SERIES_DIM {
        return Err(Error::Guard(format!(
            "det_series dimension {rows} exceeds the Leibniz guard {MAX_DET_SERIES_DIM}"
        )));
    }
    let n = rows;
    if n == 0 {
        return Ok(TruncatedSeries::constant(Complex64::new(1.0, 0.0), kmax));
    }
    let adjusted = entries.map(|s| s.with_order(kmax));
    let mut acc = TruncatedSeries::constant(Complex64::new(0.0, 0.0), kmax);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0f64;
    loop {
        let mut prod = TruncatedSeries::constant(Complex64::new(sign, 0.0), kmax);
        for (i, &j) in perm.iter().enumerate() {
            prod = prod.mul(&adjusted[[i, j]]);
        }
        acc = acc.add(&prod);
        match next_permutation(&mut perm) {
            Some(parity_flips) => {
                if parity_flips % 2 == 1 {
                    sign = -sign;
                }
            }
            None => break,
        }
    }
    Ok(acc)
}

/// Steps `perm` to the next lexicographic permutation, returning the number
/// of transpositions applied, or `None` after the last one.
fn next_permutation(perm: &mut [usize]) -> Option<usize> {
    let n = perm.len();
    if n < 2 {
        return None;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return None;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    // One swap plus a reversal of length n-i.
    Some(1 + (n - i) / 2)
}

/// Scaled ratio coefficients `N^{n/2} f_N` for an `N x N` contraction `V`.
///
/// With `apply_sign_convention` the substitution `z -> -z` together with a
/// global `(-1)^n` is applied, after which the coefficients converge in
/// distribution to those of `det(G_0 + z G_1 + z^2 G_2 + ...)`.
///
/// Large matrices with small `kmax` go through the cycle-sum derivatives
/// (whose agreement with series division is pinned by the oracle tests at
/// small sizes) because they need only trace powers, not a characteristic
/// polynomial; singular inputs fall back to the division route.
pub fn scaled_blaschke_coefficients(
    v: &ComplexMatrix,
    n: u32,
    kmax: usize,
    apply_sign_convention: bool,
) -> Result<TruncatedSeries> {
    let big_n = v.nrows();
    let ratio = if big_n > crate::linalg::FADDEEV_LEVERRIER_MAX && kmax <= MAX_DERIVATIVE_ORDER {
        match blaschke_derivatives(v, kmax) {
            Ok(derivs) => {
                let mut factorial = 1.0f64;
                let coeffs: Vec<Complex64> = derivs
                    .into_iter()
                    .enumerate()
                    .map(|(k, d)| {
                        if k > 0 {
                            factorial *= k as f64;
                        }
                        d / factorial
                    })
                    .collect();
                TruncatedSeries::new(coeffs)?
            }
            Err(Error::Singular { .. }) => series_ratio(v, kmax)?,
            Err(e) => return Err(e),
        }
    } else {
        series_ratio(v, kmax)?
    };
    let scale = (big_n as f64).powf(n as f64 / 2.0);
    let coeffs: Vec<Complex64> = ratio
        .coeffs()
        .iter()
        .take(kmax + 1)
        .enumerate()
        .map(|(k, &c)| {
            let mut value = c * scale;
            if apply_sign_convention && (n as usize + k) % 2 == 1 {
                value = -value;
            }
            value
        })
        .collect();
    TruncatedSeries::new(coeffs)
}

#[cfg(test)]
mod tests;
