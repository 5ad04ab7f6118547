//! Samplers for the point processes studied by this crate.
//!
//! Every sampler is a deterministic function of its [`RngStream`]; Monte
//! Carlo drivers hand each trial its own stream index. Probability-zero
//! degeneracies (a singular pencil, a root finder that fails to converge)
//! are retried on a derived stream and counted, never silently absorbed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::quad;
use crate::linalg::{
    conj_transpose, eigenvalues, generalized_eigenvalues, identity, matmul, polynomial_roots,
    sample_ginibre_matrix, sample_haar_unitary, ComplexMatrix, ExtendedComplex, RngStream,
};
use crate::series::{det_series, TruncatedSeries};

/// Eigenvalues of a contraction may exceed the unit disk by at most this
/// much before we call it a numerical failure.
pub const CONTRACTION_RADIUS_TOL: f64 = 1e-8;

/// Bounds on the series truncation degree for the disk sampler.
pub const MIN_TRUNCATION_DEGREE: u32 = 8;
pub const MAX_TRUNCATION_DEGREE: u32 = 512;

const MAX_RETRIES: u64 = 32;

static DEGENERATE_RESAMPLES: AtomicU64 = AtomicU64::new(0);

/// Number of degenerate draws that were retried on a derived stream since
/// process start.
pub fn degenerate_resample_count() -> u64 {
    DEGENERATE_RESAMPLES.load(Ordering::Relaxed)
}

fn note_resample(what: &str, attempt: u64) {
    DEGENERATE_RESAMPLES.fetch_add(1, Ordering::Relaxed);
    log::debug!("degenerate {what} draw, retrying on derived stream (attempt {attempt})");
}

/// Which ensemble a configuration was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleFamily {
    #[serde(rename = "planar")]
    Planar,
    #[serde(rename = "spherical")]
    Spherical,
    #[serde(rename = "hyperbolic-det-gaf")]
    HyperbolicDetGaf,
    #[serde(rename = "truncated-unitary")]
    TruncatedUnitary,
}

/// Named sampler parameter; integers stay integers on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(u64),
    Real(f64),
}

/// A finite multiset of points tagged with its ensemble and parameters.
/// Points live on the plane chart; for the spherical family the point at
/// infinity is tracked separately by `infinity_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub family: EnsembleFamily,
    pub params: BTreeMap<String, ParamValue>,
    #[serde(with = "point_pairs")]
    pub points: Vec<Complex64>,
    pub infinity_count: u32,
    pub seed: u64,
    pub stream: u64,
}

/// Points serialize as `[[re, im], ...]`.
mod point_pairs {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: serde::Serializer>(
        points: &[Complex64],
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(points.len()))?;
        for p in points {
            seq.serialize_element(&[p.re, p.im])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

fn int_params(pairs: &[(&str, u64)]) -> BTreeMap<String, ParamValue> {
    pairs
        .iter()
        .map(|&(k, v)| (k.to_string(), ParamValue::Int(v)))
        .collect()
}

/// Eigenvalues of one Ginibre draw; exactly `n` points in the plane.
pub fn ginibre_points(n: u32, rng: &mut RngStream) -> Result<PointConfiguration> {
    let (seed, stream) = (rng.seed(), rng.stream());
    let g = sample_ginibre_matrix(n as usize, rng);
    let points = eigenvalues(&g)?;
    debug_assert_eq!(points.len(), n as usize);
    Ok(PointConfiguration {
        family: EnsembleFamily::Planar,
        params: int_params(&[("n", n as u64)]),
        points,
        infinity_count: 0,
        seed,
        stream,
    })
}

/// Zeros of `det(z G_1 - G_2)`: the generalized eigenvalues of the pencil
/// `(G_2, G_1)`, a rotation-invariant point process on the sphere chart.
/// Degenerate pencils (a probability-zero event) are resampled on a derived
/// stream with a logged counter.
pub fn spherical_points(n: u32, rng: &mut RngStream) -> Result<PointConfiguration> {
    let (seed, stream) = (rng.seed(), rng.stream());
    let g1 = sample_ginibre_matrix(n as usize, rng);
    let g2 = sample_ginibre_matrix(n as usize, rng);
    let mut result = generalized_eigenvalues(&g2, &g1);
    let mut attempt = 0u64;
    while matches!(
        result,
        Err(Error::DegeneratePencil { .. }) | Err(Error::Solver { .. })
    ) && attempt < MAX_RETRIES
    {
        attempt += 1;
        note_resample("spherical pencil", attempt);
        let mut local = rng.retry_stream(attempt);
        let g1 = sample_ginibre_matrix(n as usize, &mut local);
        let g2 = sample_ginibre_matrix(n as usize, &mut local);
        result = generalized_eigenvalues(&g2, &g1);
    }
    let mut points = Vec::with_capacity(n as usize);
    let mut infinity_count = 0u32;
    for v in result? {
        match v {
            ExtendedComplex::Finite(z) => points.push(z),
            ExtendedComplex::Infinity => infinity_count += 1,
        }
    }
    Ok(PointConfiguration {
        family: EnsembleFamily::Spherical,
        params: int_params(&[("n", n as u64)]),
        points,
        infinity_count,
        seed,
        stream,
    })
}

/// The `N x N` lower-right block of a Haar unitary of size `N + n`.
pub fn truncated_unitary_matrix(n_points: u32, n: u32, rng: &mut RngStream) -> ComplexMatrix {
    let total = (n_points + n) as usize;
    let u = sample_haar_unitary(total, rng);
    let keep = n_points as usize;
    let mut v = Array2::zeros((keep, keep));
    for i in 0..keep {
        for j in 0..keep {
            v[[i, j]] = u[[i + n as usize, j + n as usize]];
        }
    }
    v
}

/// Eigenvalues of a truncated Haar unitary: exactly `N` points in the
/// closed unit disk.
pub fn truncated_unitary_points(
    n_points: u32,
    n: u32,
    rng: &mut RngStream,
) -> Result<PointConfiguration> {
    let (seed, stream) = (rng.seed(), rng.stream());
    let v = truncated_unitary_matrix(n_points, n, rng);
    let points = eigenvalues(&v)?;
    for z in &points {
        if z.norm() > 1.0 + CONTRACTION_RADIUS_TOL {
            return Err(Error::InvalidData(format!(
                "truncated-unitary eigenvalue left the disk: |z| = {}",
                z.norm()
            )));
        }
    }
    Ok(PointConfiguration {
        family: EnsembleFamily::TruncatedUnitary,
        params: int_params(&[("N", n_points as u64), ("n", n as u64)]),
        points,
        infinity_count: 0,
        seed,
        stream,
    })
}

/// Series truncation degree for the disk sampler:
/// `M = ceil(log(tail_eps (1 - radius)) / log(radius))`, clamped to
/// `[8, 512]`. The scalar coefficients have unit variance, so the sup of the
/// dropped tail on `|z| <= radius` is geometrically small in `M`.
pub fn truncation_degree(radius: f64, tail_eps: f64) -> u32 {
    let m = (tail_eps * (1.0 - radius)).ln() / radius.ln();
    (m.ceil() as i64).clamp(MIN_TRUNCATION_DEGREE as i64, MAX_TRUNCATION_DEGREE as i64) as u32
}

/// Zeros of `det(G_0 + z G_1 + ... + z^M G_M)` inside `|z| < radius`,
/// computed as companion-matrix roots of the scalar determinant polynomial.
pub fn det_gaf_zeros(
    n: u32,
    radius: f64,
    tail_eps: f64,
    rng: &mut RngStream,
) -> Result<PointConfiguration> {
    if !(0.0 < radius && radius < 1.0) {
        return Err(Error::Domain(format!("radius {radius} must lie in (0, 1)")));
    }
    if tail_eps.is_nan() || tail_eps <= 0.0 {
        return Err(Error::Domain(format!(
            "tail_eps {tail_eps} must be positive"
        )));
    }
    let degree = truncation_degree(radius, tail_eps);
    let (seed, stream) = (rng.seed(), rng.stream());
    let mut result = sample_det_gaf_poly_roots(n, degree, rng);
    let mut attempt = 0u64;
    while matches!(result, Err(Error::Solver { .. })) && attempt < MAX_RETRIES {
        attempt += 1;
        note_resample("det-gaf root finding", attempt);
        let mut local = rng.retry_stream(attempt);
        result = sample_det_gaf_poly_roots(n, degree, &mut local);
    }
    let points: Vec<Complex64> = result?.into_iter().filter(|z| z.norm() < radius).collect();
    let mut params = int_params(&[("n", n as u64), ("degree", degree as u64)]);
    params.insert("radius".into(), ParamValue::Real(radius));
    params.insert("tail_eps".into(), ParamValue::Real(tail_eps));
    Ok(PointConfiguration {
        family: EnsembleFamily::HyperbolicDetGaf,
        params,
        points,
        infinity_count: 0,
        seed,
        stream,
    })
}

fn sample_det_gaf_poly_roots(n: u32, degree: u32, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    let m = degree as usize;
    let coeff_matrices: Vec<ComplexMatrix> = (0..=m)
        .map(|_| sample_ginibre_matrix(n as usize, rng))
        .collect();
    let scalar_poly: Vec<Complex64> = if n == 1 {
        coeff_matrices.iter().map(|g| g[[0, 0]]).collect()
    } else {
        let full_order = n as usize * m;
        let entries = Array2::from_shape_fn((n as usize, n as usize), |(i, j)| {
            let coeffs: Vec<Complex64> = coeff_matrices.iter().map(|g| g[[i, j]]).collect();
            TruncatedSeries::new(coeffs).expect("Gaussian coefficients are finite")
        });
        det_series(&entries, full_order)?.coeffs().to_vec()
    };
    polynomial_roots(&scalar_poly)
}

/// Exact truncation bias of the expected count in `|z| < radius`: the zero
/// intensity of the degree-`M` determinant is `n` times that of the scalar
/// truncated series, whose radial form is explicit, so the bias is a
/// one-dimensional integral of the intensity difference.
pub fn det_gaf_truncation_bias(n: u32, radius: f64, tail_eps: f64) -> f64 {
    let m = truncation_degree(radius, tail_eps) as i32;
    // In u = |z|^2 the expected count is the integral of
    // S'/S + u (S''S - S'^2)/S^2 with S(u) = sum_{k<=M} u^k; the full
    // series gives 1/(1-u)^2.
    let integrand = move |u: f64| -> f64 {
        let mut s = 0.0f64;
        let mut s1 = 0.0f64;
        let mut s2 = 0.0f64;
        for k in (0..=m).rev() {
            s = s * u + 1.0;
            if k >= 1 {
                s1 = s1 * u + k as f64;
            }
            if k >= 2 {
                s2 = s2 * u + (k * (k - 1)) as f64;
            }
        }
        let g_m = s1 / s + u * (s2 * s - s1 * s1) / (s * s);
        let g_full = 1.0 / ((1.0 - u) * (1.0 - u));
        g_m - g_full
    };
    let r2 = radius * radius;
    n as f64 * quad::integrate(&integrand, 0.0, r2, 1e-12).abs()
}

/// `V = Q* blockdiag(A, I_{N-n}) P*` with `P, Q` independent Haar
/// unitaries of size `N`; the singular values of `V` are those of `A`
/// padded with ones.
pub fn structured_contraction(
    a: &ComplexMatrix,
    n_big: u32,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let n = rows;
    let big = n_big as usize;
    if big < n {
        return Err(Error::Domain(format!(
            "embedding size {big} must be at least the block size {n}"
        )));
    }
    let q = sample_haar_unitary(big, rng);
    let p = sample_haar_unitary(big, rng);
    let mut d = identity(big);
    for i in 0..n {
        for j in 0..n {
            d[[i, j]] = a[[i, j]];
        }
    }
    Ok(matmul(
        &matmul(&conj_transpose(&q), &d),
        &conj_transpose(&p),
    ))
}
