//! Analytic realization of the de Rham elliptic polylogarithm on the
//! universal cover `C x C x H`.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: lattice enumeration, finite differences, Cauchy extraction
//!   and contour integrals.
//! - [`weierstrass`]: `sigma`, `zeta`, `wp`, quasi-periods and `g2`, `g3`.
//! - [`kronecker`]: the theta kernel, `J(z, w, tau)`, the D-variant Taylor
//!   coefficients `s_k^D` and the Kato-Siegel logarithmic derivative.
//! - [`logsheaf`]: divided-power fibers with their relative and absolute
//!   connections.
//! - [`polylog`]: the forms `l_n^D`, `L_n^D` and their closedness, plus the
//!   torsion specialization.
//! - [`eisenstein`]: level-N Eisenstein series with naive and Lipschitz
//!   evaluators.
//! - [`verify`]: seeded verification suites and JSON reports.

pub mod eisenstein;
pub mod error;
pub mod kronecker;
pub mod logsheaf;
pub mod numerics;
pub mod polylog;
pub mod verify;
pub mod weierstrass;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::{CauchyConfig, ComplexValue, DiffConfig, LatticeOrdering, LatticeTruncation};
pub use weierstrass::{ModuliPoint, QuasiPeriods};
