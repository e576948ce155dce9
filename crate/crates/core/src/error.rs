use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered while evaluating at {at}")]
    NonFinite { at: Complex64 },

    /// Cauchy extraction self-check failed (pole inside the contour or too few samples).
    #[error("aliasing detected in Cauchy extraction: {0}")]
    Aliasing(String),

    #[error("point {z} lies within {distance:e} of a singular lattice point")]
    PoleProximity { z: Complex64, distance: f64 },

    #[error("series failed to converge: {0}")]
    Convergence(String),

    #[error("summation mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("torsion label ({a}, {b}) scaled by {d} is zero modulo {n}")]
    DegenerateLabel { a: i64, b: i64, n: i64, d: i64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub(crate) fn ensure_finite(value: Complex64, at: Complex64) -> Result<Complex64> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { at })
    }
}
