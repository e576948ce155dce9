//! Analytic completion of truncated inner lattice rows.
//!
//! Under Eisenstein summation the inner `n`-sum of every row is taken to
//! infinity before the rows are added. A box-truncated row is therefore
//! completed with an asymptotic expansion of
//! `sum_{|n| > R} e^{2 pi i n alpha} (x + n)^{-s}`.

use num_complex::Complex64;

use crate::numerics::TWO_PI_I;

const BY_PARTS_TERMS: usize = 12;

/// Rising factorial `(s)_j`.
fn rising(s: u32, j: u32) -> f64 {
    (0..j).map(|i| (s + i) as f64).product()
}

/// `sum_{n = R+1}^inf (n + y)^{-s}` for `s >= 2` by midpoint Euler-Maclaurin.
fn em_tail(y: Complex64, s: u32, radius: i64) -> Complex64 {
    let a = Complex64::new(radius as f64 + 0.5, 0.0) + y;
    let deriv = |j: u32| -> Complex64 {
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * rising(s, j) * a.powi(-((s + j) as i32))
    };
    a.powi(1 - s as i32) / (s as f64 - 1.0) + deriv(1) / 24.0 - 7.0 * deriv(3) / 5760.0
        + 31.0 * deriv(5) / 967_680.0
        - 127.0 * deriv(7) / 154_828_800.0
}

/// `sum_{n = R+1}^inf u^n (n + y)^{-s}` for `u != 1` by repeated summation by parts.
fn by_parts_tail(u: Complex64, y: Complex64, s: u32, radius: i64) -> Complex64 {
    let start = radius + 1;
    let g: Vec<Complex64> = (0..=BY_PARTS_TERMS as i64)
        .map(|i| (Complex64::new((start + i) as f64, 0.0) + y).powi(-(s as i32)))
        .collect();
    let ratio = u / (1.0 - u);
    let mut diffs = g;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut weight = Complex64::new(1.0, 0.0);
    for _ in 0..=BY_PARTS_TERMS {
        acc += weight * diffs[0];
        weight *= ratio;
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.is_empty() {
            break;
        }
    }
    u.powi(start as i32) / (1.0 - u) * acc
}

/// `sum_{|n| > R} e^{2 pi i n alpha} (x + n)^{-s}`, with the `s = 1, alpha = 0`
/// case summed symmetrically.
pub(crate) fn row_tail(x: Complex64, alpha: f64, s: u32, radius: i64) -> Complex64 {
    let alpha = alpha - alpha.floor();
    let sign = if s.is_multiple_of(2) { 1.0 } else { -1.0 };
    if alpha == 0.0 {
        if s == 1 {
            let a = radius as f64 + 0.5;
            let g = |j: u32| -> Complex64 {
                let fact: f64 = (1..=j).map(|i| i as f64).product();
                let sgn = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                sgn * fact
                    * ((a + x).powi(-(1 + j as i32)) - (a - x).powi(-(1 + j as i32)))
            };
            return ((a - x).ln() - (a + x).ln()) + g(1) / 24.0 - 7.0 * g(3) / 5760.0
                + 31.0 * g(5) / 967_680.0
                - 127.0 * g(7) / 154_828_800.0;
        }
        // (x - n)^{-s} = (-1)^s (n - x)^{-s}
        return em_tail(x, s, radius) + sign * em_tail(-x, s, radius);
    }
    let u = (TWO_PI_I * alpha).exp();
    by_parts_tail(u, x, s, radius) + sign * by_parts_tail(u.inv(), -x, s, radius)
}
