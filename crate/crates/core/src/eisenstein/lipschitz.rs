//! Closed forms for twisted inner rows `sum_n e^{2 pi i n alpha} (y + n)^{-s}`.
//!
//! For `Im y > 0` and `0 <= alpha < 1` the Lipschitz formula gives
//!
//! ```text
//! sum_n e^{2 pi i n alpha} (y + n)^{-s}
//!     = (-2 pi i)^s / (s-1)! * sum_{r >= 1} (r - alpha)^{s-1} e^{2 pi i (r - alpha) y}
//! ```
//!
//! with an extra `-pi i` when `s = 1, alpha = 0` (symmetric inner summation).
//! Real rows reduce to periodic Bernoulli polynomials.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{CompensatedSum, I, TWO_PI_I};

const MAX_TERMS: usize = 1_000_000;

/// A rational phase `num / den` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Phase {
    pub num: i64,
    pub den: i64,
}

impl Phase {
    pub(crate) fn new(num: i64, den: i64) -> Self {
        Self {
            num: num.rem_euclid(den),
            den,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub(crate) fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub(crate) fn neg(&self) -> Self {
        Self::new(-self.num, self.den)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Bernoulli numbers `B_0 .. B_n` (with `B_1 = -1/2`).
fn bernoulli_numbers(n: u32) -> Vec<f64> {
    let mut b = vec![0.0; n as usize + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let s: f64 = (0..m).map(|k| binomial(m + 1, k) * b[k as usize]).sum();
        b[m as usize] = -s / f64::from(m + 1);
    }
    b
}

/// `B_n(x)`.
pub(crate) fn bernoulli_poly(n: u32, x: f64) -> f64 {
    let b = bernoulli_numbers(n);
    (0..=n)
        .map(|k| binomial(n, k) * b[k as usize] * x.powi((n - k) as i32))
        .sum()
}

/// `sum_{n != 0} e^{2 pi i n alpha} n^{-s}`, symmetric for `s = 1`.
pub(crate) fn origin_row(alpha: Phase, s: u32) -> Complex64 {
    if s == 1 && alpha.is_zero() {
        return Complex64::new(0.0, 0.0);
    }
    -TWO_PI_I.powi(s as i32) * bernoulli_poly(s, alpha.value()) / factorial(s)
}

/// `sum_n e^{2 pi i n alpha} (d/q + n)^{-s}` for `d` not divisible by `q`.
///
/// Splitting `j = d + q n` by characters modulo `q` reduces to [`origin_row`].
pub(crate) fn shifted_real_row(d: i64, q: i64, alpha: Phase, s: u32) -> Complex64 {
    let qf = q as f64;
    let mut acc = CompensatedSum::new();
    for t in 0..q {
        let beta = Phase::new(alpha.num + t * alpha.den, q * alpha.den);
        let phase = (-TWO_PI_I * (t * d) as f64 / qf).exp();
        acc.add(phase * origin_row(beta, s));
    }
    qf.powi(s as i32 - 1) * (-TWO_PI_I * alpha.value() * d as f64 / qf).exp() * acc.value()
}

fn upper_row(y: Complex64, alpha: Phase, s: u32) -> Result<Complex64> {
    let a = alpha.value();
    let decay = 2.0 * PI * y.im;
    let peak = (s as f64 - 1.0) / decay;
    let mut acc = CompensatedSum::new();
    for r in 1..=MAX_TERMS {
        let freq = r as f64 - a;
        let term = freq.powi(s as i32 - 1) * (TWO_PI_I * freq * y).exp();
        acc.add(term);
        if freq > peak && term.norm() <= 1e-18 * acc.value().norm() {
            let pref = (-TWO_PI_I).powi(s as i32) / factorial(s - 1);
            let mut out = pref * acc.value();
            if s == 1 && alpha.is_zero() {
                out -= PI * I;
            }
            return Ok(out);
        }
    }
    Err(Error::Convergence(format!(
        "Lipschitz row at y = {y} did not converge in {MAX_TERMS} terms"
    )))
}

/// `sum_n e^{2 pi i n alpha} (y + n)^{-s}` for `Im y != 0`.
pub(crate) fn twisted_row(y: Complex64, alpha: Phase, s: u32) -> Result<Complex64> {
    if s == 0 {
        return Err(Error::InvalidInput("row exponent must be positive".into()));
    }
    if y.im > 0.0 {
        upper_row(y, alpha, s)
    } else if y.im < 0.0 {
        let sign = if s.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * upper_row(-y, alpha.neg(), s)?)
    } else {
        Err(Error::InvalidInput(format!("twisted_row needs Im y != 0, got {y}")))
    }
}
