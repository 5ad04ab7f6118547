//! Closed-form kernels, reference measures, joint intensities, Möbius maps
//! and predicted statistics for the four determinantal families.
//!
//! Each family is a reproducing kernel together with a reference measure on
//! its domain:
//!
//! - planar(n): `K(z,w) = sum_{k<n} (z conj(w))^k / k!` against
//!   `exp(-|z|^2)/pi` on the plane;
//! - spherical(n): `K(z,w) = (1 + z conj(w))^{n-1}` against
//!   `(n/pi) (1+|z|^2)^{-(n+1)}` on the sphere chart;
//! - hyperbolic(n): `K(z,w) = (1 - z conj(w))^{-(n+1)}` against
//!   `(n/pi) (1-|z|^2)^{n-1}` on the unit disk;
//! - truncated(N,n): the degree-`N` truncation of the hyperbolic kernel,
//!   same reference measure.
//!
//! First intensities are radial for every family, so expected counts reduce
//! to one-dimensional integrals; closed forms are used where available and
//! an adaptive quadrature route is kept alongside as an independent check.

pub mod quad;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, ComplexMatrix, ExtendedComplex};

/// Absolute tolerance for the adaptive radial quadrature.
pub const QUADRATURE_TOL: f64 = 1e-9;
/// Gram determinants above this negative floor are treated as round-off.
pub const PSD_CLAMP: f64 = 1e-10;
/// Tolerance on the Möbius parameter constraints.
pub const MOBIUS_PARAM_TOL: f64 = 1e-12;

/// One of the four determinantal kernel families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    Planar {
        n: u32,
    },
    Spherical {
        n: u32,
    },
    Hyperbolic {
        n: u32,
    },
    /// Eigenvalue kernel of an `N x N` block of a Haar unitary of size
    /// `N + n`; `n_points` is `N`.
    Truncated {
        n_points: u32,
        n: u32,
    },
}

impl KernelFamily {
    pub fn planar(n: u32) -> Self {
        assert!(n >= 1);
        KernelFamily::Planar { n }
    }

    pub fn spherical(n: u32) -> Self {
        assert!(n >= 1);
        KernelFamily::Spherical { n }
    }

    pub fn hyperbolic(n: u32) -> Self {
        assert!(n >= 1);
        KernelFamily::Hyperbolic { n }
    }

    pub fn truncated(n_points: u32, n: u32) -> Self {
        assert!(n_points >= 1 && n >= 1);
        KernelFamily::Truncated { n_points, n }
    }

    /// Whether `z` lies in the family's domain.
    fn check_domain(&self, z: Complex64) -> Result<()> {
        match self {
            KernelFamily::Planar { .. } | KernelFamily::Spherical { .. } => Ok(()),
            KernelFamily::Hyperbolic { .. } | KernelFamily::Truncated { .. } => {
                if z.norm() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "|z| = {} is outside the unit disk",
                        z.norm()
                    )))
                }
            }
        }
    }
}

/// Coefficient `C_k` of the truncated kernel, `C_0 = 1`,
/// `C_{k+1} = C_k (n+k+1)/(k+1)`; equals `binom(n+k, k)`. The recurrence
/// avoids binomials of negative arguments.
pub fn truncated_coefficient(n: u32, k: u32) -> f64 {
    let mut c = 1.0f64;
    for i in 0..k {
        c *= (n as f64 + i as f64 + 1.0) / (i as f64 + 1.0);
    }
    c
}

/// Kernel value `K(z, w)`. Hermitian: `K(z,w) = conj(K(w,z))`.
pub fn kernel_eval(family: &KernelFamily, z: Complex64, w: Complex64) -> Result<Complex64> {
    family.check_domain(z)?;
    family.check_domain(w)?;
    let zw = z * w.conj();
    Ok(match *family {
        KernelFamily::Planar { n } => {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term;
            for k in 1..n {
                term = term * zw / (k as f64);
                sum += term;
            }
            sum
        }
        KernelFamily::Spherical { n } => (Complex64::new(1.0, 0.0) + zw).powi(n as i32 - 1),
        KernelFamily::Hyperbolic { n } => (Complex64::new(1.0, 0.0) - zw).powi(-(n as i32) - 1),
        KernelFamily::Truncated { n_points, n } => {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = term;
            for k in 0..n_points - 1 {
                term = term * zw * ((n as f64 + k as f64 + 1.0) / (k as f64 + 1.0));
                sum += term;
            }
            sum
        }
    })
}

/// Density of the reference measure with respect to planar Lebesgue measure.
pub fn reference_density(family: &KernelFamily, z: Complex64) -> Result<f64> {
    family.check_domain(z)?;
    let t = z.norm_sqr();
    Ok(match *family {
        KernelFamily::Planar { .. } => (-t).exp() / std::f64::consts::PI,
        KernelFamily::Spherical { n } => {
            n as f64 / std::f64::consts::PI / (1.0 + t).powi(n as i32 + 1)
        }
        KernelFamily::Hyperbolic { n } | KernelFamily::Truncated { n, .. } => {
            n as f64 / std::f64::consts::PI * (1.0 - t).powi(n as i32 - 1)
        }
    })
}

/// Raw Gram determinant `det(K(z_i, z_j))`, sign and all.
pub fn gram_determinant(family: &KernelFamily, points: &[Complex64]) -> Result<f64> {
    let k = points.len();
    if k == 0 {
        return Ok(1.0);
    }
    let mut gram: ComplexMatrix = ndarray::Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            gram[[i, j]] = kernel_eval(family, points[i], points[j])?;
        }
    }
    Ok(determinant(&gram)?.re)
}

/// Joint intensity `rho_k(z_1..z_k) = det(K(z_i, z_j))`. Determinants within
/// [`PSD_CLAMP`] of zero from below are clamped to zero; anything more
/// negative indicates a broken kernel and is an error.
pub fn joint_intensity(family: &KernelFamily, points: &[Complex64]) -> Result<f64> {
    let det = gram_determinant(family, points)?;
    if det < -PSD_CLAMP {
        return Err(Error::PsdViolation { value: det });
    }
    Ok(det.max(0.0))
}

/// Unnormalized joint density of the spherical ensemble:
/// `prod_{i<j} |z_i - z_j|^2 prod_k (1 + |z_k|^2)^{-(n+1)}`.
pub fn spherical_joint_density(points: &[Complex64], n: u32) -> Result<f64> {
    if points.len() != n as usize {
        return Err(Error::Arity {
            expected: n as usize,
            got: points.len(),
        });
    }
    let mut value = 1.0f64;
    for i in 0..points.len() {
        for j in 0..i {
            value *= (points[i] - points[j]).norm_sqr();
        }
    }
    for &z in points {
        value /= (1.0 + z.norm_sqr()).powi(n as i32 + 1);
    }
    Ok(value)
}

/// Expected number of points in the open disk of radius `r`, in closed form.
///
/// planar(n): `sum_{k<n} P(k+1, r^2)` with `P` the regularized lower
/// incomplete gamma; spherical(n): `n r^2/(1+r^2)`; hyperbolic(n):
/// `n r^2/(1-r^2)`; truncated(N,n): `sum_{k<N} I_{r^2}(k+1, n)` with `I`
/// the regularized incomplete beta.
pub fn expected_count(family: &KernelFamily, r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Domain(format!("radius {r} must be nonnegative")));
    }
    Ok(match *family {
        KernelFamily::Planar { n } => {
            if r.is_infinite() {
                n as f64
            } else {
                let x = r * r;
                (0..n).map(|k| regularized_gamma_int(k + 1, x)).sum()
            }
        }
        KernelFamily::Spherical { n } => {
            if r.is_infinite() {
                n as f64
            } else {
                n as f64 * r * r / (1.0 + r * r)
            }
        }
        KernelFamily::Hyperbolic { n } => {
            if r >= 1.0 {
                return Err(Error::Domain(format!("hyperbolic radius {r} must be < 1")));
            }
            n as f64 * r * r / (1.0 - r * r)
        }
        KernelFamily::Truncated { n_points, n } => {
            if r > 1.0 {
                return Err(Error::Domain(format!("truncated radius {r} must be <= 1")));
            }
            let t = r * r;
            (0..n_points).map(|k| beta_cdf_integer(k + 1, n, t)).sum()
        }
    })
}

/// The same first moment through adaptive radial quadrature of
/// `2 pi s K(s,s) density(s)`; kept as an independent route.
pub fn expected_count_quadrature(family: &KernelFamily, r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!(
            "quadrature radius {r} must be finite"
        )));
    }
    match family {
        KernelFamily::Hyperbolic { .. } | KernelFamily::Truncated { .. } if r >= 1.0 => {
            return Err(Error::Domain(format!("disk radius {r} must be < 1")));
        }
        _ => {}
    }
    let fam = *family;
    let integrand = move |s: f64| -> f64 {
        let z = Complex64::new(s, 0.0);
        let k = kernel_eval(&fam, z, z).expect("in-domain").re;
        let d = reference_density(&fam, z).expect("in-domain");
        2.0 * std::f64::consts::PI * s * k * d
    };
    Ok(quad::integrate(&integrand, 0.0, r, QUADRATURE_TOL))
}

/// `n * integral_0^1 t^j (1-t)^{n-1} dt` by quadrature; multiplied by `C_j`
/// this must be 1 for every `j`.
pub fn truncated_moment_quadrature(n: u32, j: u32) -> f64 {
    let integrand =
        move |t: f64| -> f64 { n as f64 * t.powi(j as i32) * (1.0 - t).powi(n as i32 - 1) };
    quad::integrate(&integrand, 0.0, 1.0, QUADRATURE_TOL)
}

/// Mean and variance of the number of points with `|z|^2 <= t` for the
/// truncated family: the squared moduli are independent Beta(k+1, n)
/// variables, so the count is a sum of independent indicators.
pub fn predicted_count_moments(n_points: u32, n: u32, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("threshold {t} must lie in [0, 1]")));
    }
    let mut mean = 0.0;
    let mut var = 0.0;
    for k in 0..n_points {
        let p = beta_cdf_integer(k + 1, n, t);
        mean += p;
        var += p * (1.0 - p);
    }
    Ok((mean, var))
}

/// Central fourth moment of the same count (independent indicators); used
/// to attach a standard error to empirical variances.
pub fn predicted_count_fourth_central(n_points: u32, n: u32, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("threshold {t} must lie in [0, 1]")));
    }
    let mut sum_var = 0.0;
    let mut sum_mu4 = 0.0;
    let mut sum_var_sq = 0.0;
    for k in 0..n_points {
        let p = beta_cdf_integer(k + 1, n, t);
        let v = p * (1.0 - p);
        sum_var += v;
        sum_var_sq += v * v;
        sum_mu4 += v * (1.0 - 3.0 * v);
    }
    Ok(sum_mu4 + 3.0 * (sum_var * sum_var - sum_var_sq))
}

/// `E|f_N(0)|^2 / N^n` for the truncated family:
/// `prod_{k=0}^{N-1} (k+1)/(n+k+1) = n! N! / (N+n)!`.
pub fn blaschke_zero_moment(n_points: u32, n: u32) -> f64 {
    let mut value = 1.0f64;
    for k in 0..n_points {
        value *= (k as f64 + 1.0) / (n as f64 + k as f64 + 1.0);
    }
    value
}

/// Regularized lower incomplete gamma with integer shape:
/// `P(k+1, x) = 1 - exp(-x) sum_{j<=k} x^j/j!`.
fn regularized_gamma_int(kp1: u32, x: f64) -> f64 {
    let k = kp1 - 1;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 1..=k {
        term *= x / j as f64;
        sum += term;
    }
    let tail = (-x).exp() * sum;
    (1.0 - tail).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_t(a, b)` for integer parameters, by the
/// exact binomial sum `sum_{j=a}^{a+b-1} C(a+b-1, j) t^j (1-t)^{a+b-1-j}`.
pub fn beta_cdf_integer(a: u32, b: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let m = a + b - 1;
    let mut sum = 0.0f64;
    for j in a..=m {
        sum += binomial(m, j) * t.powi(j as i32) * (1.0 - t).powi((m - j) as i32);
    }
    sum.clamp(0.0, 1.0)
}

/// Binomial coefficient as f64.
pub fn binomial(m: u32, j: u32) -> f64 {
    if j > m {
        return 0.0;
    }
    let j = j.min(m - j);
    let mut value = 1.0f64;
    for i in 0..j {
        value *= (m - i) as f64 / (i + 1) as f64;
    }
    value
}

/// Which geometry a Möbius map acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Sphere,
    Disk,
}

/// Möbius transformation of the sphere chart or the unit disk.
///
/// Sphere: `phi(z) = (alpha z + beta) / (-conj(beta) z + conj(alpha))` with
/// `|alpha|^2 + |beta|^2 = 1` (a rotation of the sphere). Disk:
/// `phi(z) = (alpha z + beta) / (conj(beta) z + conj(alpha))` with
/// `|alpha|^2 - |beta|^2 = 1` (a conformal automorphism of the disk).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    alpha: Complex64,
    beta: Complex64,
    geometry: Geometry,
}

impl MobiusMap {
    pub fn sphere(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let defect = (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs();
        if defect > MOBIUS_PARAM_TOL {
            return Err(Error::Domain(format!(
                "|alpha|^2 + |beta|^2 deviates from 1 by {defect:.3e}"
            )));
        }
        Ok(MobiusMap {
            alpha,
            beta,
            geometry: Geometry::Sphere,
        })
    }

    pub fn disk(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let defect = (alpha.norm_sqr() - beta.norm_sqr() - 1.0).abs();
        if defect > MOBIUS_PARAM_TOL {
            return Err(Error::Domain(format!(
                "|alpha|^2 - |beta|^2 deviates from 1 by {defect:.3e}"
            )));
        }
        Ok(MobiusMap {
            alpha,
            beta,
            geometry: Geometry::Disk,
        })
    }

    pub fn identity(geometry: Geometry) -> Self {
        MobiusMap {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            geometry,
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Denominator `-conj(beta) z + conj(alpha)` (sphere) or
    /// `conj(beta) z + conj(alpha)` (disk).
    pub fn denominator(&self, z: Complex64) -> Complex64 {
        match self.geometry {
            Geometry::Sphere => -self.beta.conj() * z + self.alpha.conj(),
            Geometry::Disk => self.beta.conj() * z + self.alpha.conj(),
        }
    }

    /// Image of `z`; the sphere pole maps to infinity.
    pub fn apply(&self, z: Complex64) -> ExtendedComplex {
        let den = self.denominator(z);
        if den.norm() == 0.0 {
            return ExtendedComplex::Infinity;
        }
        let image = (self.alpha * z + self.beta) / den;
        if image.re.is_finite() && image.im.is_finite() {
            ExtendedComplex::Finite(image)
        } else {
            ExtendedComplex::Infinity
        }
    }

    /// Image of an extended point; `infinity -> alpha / (-conj(beta))` on
    /// the sphere.
    pub fn apply_extended(&self, z: ExtendedComplex) -> ExtendedComplex {
        match z {
            ExtendedComplex::Finite(v) => self.apply(v),
            ExtendedComplex::Infinity => {
                let den = match self.geometry {
                    Geometry::Sphere => -self.beta.conj(),
                    Geometry::Disk => self.beta.conj(),
                };
                if den.norm() == 0.0 {
                    ExtendedComplex::Infinity
                } else {
                    ExtendedComplex::Finite(self.alpha / den)
                }
            }
        }
    }

    /// Derivative by the literal quotient rule, with no algebraic
    /// simplification; the closed form `1/denominator^2` is checked against
    /// this in the identity tests.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let num = self.alpha * z + self.beta;
        let den = self.denominator(z);
        let dnum = self.alpha;
        let dden = match self.geometry {
            Geometry::Sphere => -self.beta.conj(),
            Geometry::Disk => self.beta.conj(),
        };
        (dnum * den - num * dden) / (den * den)
    }
}

/// Free-function form of [`MobiusMap::apply`].
pub fn mobius_apply(map: &MobiusMap, z: Complex64) -> ExtendedComplex {
    map.apply(z)
}
