//! Determinantal point processes arising from random matrix-valued analytic
//! functions.
//!
//! The crate samples four ensembles of random points in the plane, the sphere
//! (via stereographic projection) and the unit disk, evaluates their
//! determinantal kernels and predicted statistics in closed form, expands
//! power-series coefficients of matrix Blaschke-type ratios, and packages
//! seed-pinned statistical verification drivers for all of it.
//!
//! Modules:
//! - [`linalg`]: complex dense linear algebra and reproducible randomness.
//! - [`ensembles`]: point-configuration samplers.
//! - [`kernels`]: closed-form kernels, reference measures, Möbius maps and
//!   predicted statistics.
//! - [`series`]: cycle-sum coefficients of `det(zI+V)/det(I+zV*)`, truncated
//!   power-series arithmetic and determinant expansion.
//! - [`verify`]: Kolmogorov-Smirnov and moment tests turning the closed-form
//!   predictions into pass/fail reports.

pub mod ensembles;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ExtendedComplex, RngStream};
