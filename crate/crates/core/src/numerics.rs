//! Deterministic complex-arithmetic utilities shared by every other module.
//!
//! Lattice sums over `(m, n) != (0, 0)` are only conditionally convergent in
//! low weight, so the enumeration order is part of the contract: the
//! Eisenstein ordering visits rows `m = 0, 1, -1, 2, -2, ...` and inside each
//! row the columns `n` in the same symmetric order. Parallel reductions sum
//! whole rows independently and then combine the row totals in row order, so
//! results do not depend on the number of worker threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub type ComplexValue = Complex64;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const TWO_PI_I: Complex64 = Complex64 {
    re: 0.0,
    im: 2.0 * PI,
};

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex64) {
        let (re, cre) = two_sum(self.sum.re, x.re);
        let (im, cim) = two_sum(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.carry += Complex64::new(cre, cim);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, err)
}

/// Plain or compensated accumulation, selected at runtime.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Accumulator {
    Plain(Complex64),
    Compensated(CompensatedSum),
}

impl Accumulator {
    pub(crate) fn new(compensated: bool) -> Self {
        if compensated {
            Accumulator::Compensated(CompensatedSum::new())
        } else {
            Accumulator::Plain(Complex64::new(0.0, 0.0))
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: Complex64) {
        match self {
            Accumulator::Plain(s) => *s += x,
            Accumulator::Compensated(c) => c.add(x),
        }
    }

    pub(crate) fn value(&self) -> Complex64 {
        match self {
            Accumulator::Plain(s) => *s,
            Accumulator::Compensated(c) => c.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeOrdering {
    /// Inner `n`-sum first (symmetric about 0), then `m` symmetric about 0.
    Eisenstein,
    /// All pairs with `|m|, |n| <= R`, lexicographic in `(m, n)`.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeTruncation {
    pub shell_radius: u32,
    pub ordering: LatticeOrdering,
    pub compensated_summation: bool,
}

impl LatticeTruncation {
    pub fn new(shell_radius: u32, ordering: LatticeOrdering, compensated: bool) -> Result<Self> {
        let t = Self {
            shell_radius,
            ordering,
            compensated_summation: compensated,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn eisenstein(shell_radius: u32) -> Self {
        Self {
            shell_radius: shell_radius.max(1),
            ordering: LatticeOrdering::Eisenstein,
            compensated_summation: true,
        }
    }

    pub fn boxed(shell_radius: u32) -> Self {
        Self {
            shell_radius: shell_radius.max(1),
            ordering: LatticeOrdering::Box,
            compensated_summation: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shell_radius == 0 {
            return Err(Error::InvalidInput("shell_radius must be at least 1".into()));
        }
        Ok(())
    }

    /// Row indices `m` in summation order.
    pub fn rows(&self) -> Vec<i64> {
        let r = self.shell_radius as i64;
        match self.ordering {
            LatticeOrdering::Eisenstein => symmetric_order(r),
            LatticeOrdering::Box => (-r..=r).collect(),
        }
    }

    /// Column indices `n` of row `m` in summation order, origin excluded.
    pub fn columns(&self, m: i64) -> Vec<i64> {
        let r = self.shell_radius as i64;
        let mut cols = match self.ordering {
            LatticeOrdering::Eisenstein => symmetric_order(r),
            LatticeOrdering::Box => (-r..=r).collect(),
        };
        if m == 0 {
            cols.retain(|&n| n != 0);
        }
        cols
    }
}

impl Default for LatticeTruncation {
    fn default() -> Self {
        Self::eisenstein(400)
    }
}

/// `0, 1, -1, 2, -2, ..., r, -r`.
pub fn symmetric_order(r: i64) -> Vec<i64> {
    let mut out = Vec::with_capacity(2 * r as usize + 1);
    out.push(0);
    for k in 1..=r {
        out.push(k);
        out.push(-k);
    }
    out
}

pub fn enumerate_lattice(trunc: &LatticeTruncation) -> Vec<(i64, i64)> {
    trunc
        .rows()
        .into_iter()
        .flat_map(|m| trunc.columns(m).into_iter().map(move |n| (m, n)))
        .collect()
}

/// Sums `term(m, n)` over the truncated lattice minus the origin.
///
/// Rows are reduced in parallel on the current rayon pool and combined in
/// row order, so the result is bit-identical for any thread count.
pub fn lattice_sum<F>(trunc: &LatticeTruncation, term: F) -> Complex64
where
    F: Fn(i64, i64) -> Complex64 + Sync,
{
    lattice_sum_rows(trunc, |m, cols| {
        let mut acc = Accumulator::new(trunc.compensated_summation);
        for &n in cols {
            acc.add(term(m, n));
        }
        acc.value()
    })
}

/// Like [`lattice_sum`], but the caller computes each row total itself
/// (for example to append an analytic tail to the inner sum).
pub fn lattice_sum_rows<F>(trunc: &LatticeTruncation, row_total: F) -> Complex64
where
    F: Fn(i64, &[i64]) -> Complex64 + Sync,
{
    let rows = trunc.rows();
    let totals: Vec<Complex64> = rows
        .par_iter()
        .map(|&m| {
            let cols = trunc.columns(m);
            row_total(m, &cols)
        })
        .collect();
    let mut acc = Accumulator::new(trunc.compensated_summation);
    for t in totals {
        acc.add(t);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    pub step: f64,
    pub richardson_levels: u32,
}

impl DiffConfig {
    pub const MAX_RICHARDSON: u32 = 4;

    pub fn new(step: f64, richardson_levels: u32) -> Result<Self> {
        let c = Self {
            step,
            richardson_levels,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "finite-difference step must be positive, got {}",
                self.step
            )));
        }
        if self.richardson_levels > Self::MAX_RICHARDSON {
            return Err(Error::InvalidInput(format!(
                "at most {} Richardson levels are supported",
                Self::MAX_RICHARDSON
            )));
        }
        Ok(())
    }
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson_levels: 2,
        }
    }
}

/// Central-difference derivative with Richardson extrapolation.
///
/// The stencil is `at ± step / 2^j` for `j = 0..=richardson_levels`.
pub fn finite_diff<F>(f: F, at: Complex64, cfg: &DiffConfig) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    Ok(finite_diff_vec(|x| Ok(vec![f(x)?]), at, cfg)?[0])
}

/// [`finite_diff`] applied componentwise to a vector-valued function, sharing
/// one stencil for all components.
pub fn finite_diff_vec<F>(f: F, at: Complex64, cfg: &DiffConfig) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>>,
{
    cfg.validate()?;
    let levels = cfg.richardson_levels as usize;
    let mut table: Vec<Vec<Complex64>> = Vec::with_capacity(levels + 1);
    let mut h = cfg.step;
    for _ in 0..=levels {
        let hc = Complex64::new(h, 0.0);
        let fp = f(at + hc)?;
        let fm = f(at - hc)?;
        if fp.len() != fm.len() {
            return Err(Error::InvalidInput("stencil values changed length".into()));
        }
        let row = fp
            .iter()
            .zip(&fm)
            .map(|(p, m)| {
                ensure_finite(*p, at + hc)?;
                ensure_finite(*m, at - hc)?;
                Ok((p - m) / (2.0 * h))
            })
            .collect::<Result<Vec<_>>>()?;
        table.push(row);
        h *= 0.5;
    }
    // Neville-style elimination of the h^2, h^4, ... error terms.
    let mut factor = 1.0;
    for j in 1..=levels {
        factor *= 4.0;
        for i in (j..=levels).rev() {
            let prev = table[i - 1].clone();
            for (t, p) in table[i].iter_mut().zip(prev) {
                *t = *t + (*t - p) / (factor - 1.0);
            }
        }
    }
    table[levels].iter().map(|v| ensure_finite(*v, at)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyConfig {
    pub radius: f64,
    pub samples: usize,
    #[serde(default = "default_true")]
    pub self_check: bool,
}

fn default_true() -> bool {
    true
}

impl CauchyConfig {
    pub const MIN_SAMPLES: usize = 32;

    pub fn new(radius: f64, samples: usize) -> Result<Self> {
        let c = Self {
            radius,
            samples,
            self_check: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "contour radius must be positive, got {}",
                self.radius
            )));
        }
        if self.samples < Self::MIN_SAMPLES || !self.samples.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "sample count must be a power of two >= {}, got {}",
                Self::MIN_SAMPLES,
                self.samples
            )));
        }
        Ok(())
    }
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            radius: 0.3,
            samples: 128,
            self_check: true,
        }
    }
}

fn trapezoid_coeffs(values: &[Complex64], radius: f64, lo: i64, hi: i64) -> Vec<Complex64> {
    let m = values.len();
    (lo..=hi)
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for (j, v) in values.iter().enumerate() {
                let theta = -2.0 * PI * (k * j as i64).rem_euclid(m as i64) as f64 / m as f64;
                acc.add(v * Complex64::from_polar(1.0, theta));
            }
            acc.value() / (m as f64 * radius.powi(k as i32))
        })
        .collect()
}

/// Taylor coefficients `c_0..=c_order` at 0 by the trapezoid rule on `|w| = radius`.
///
/// With `self_check` the estimate is repeated with twice the samples and the
/// principal part (`c_{-1}`, `c_{-2}`) is required to vanish; either failure
/// is reported as [`Error::Aliasing`].
pub fn cauchy_coeffs<F>(f: F, order: usize, cfg: &CauchyConfig) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    cfg.validate()?;
    let m = if cfg.self_check {
        2 * cfg.samples
    } else {
        cfg.samples
    };
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let w = Complex64::from_polar(cfg.radius, 2.0 * PI * j as f64 / m as f64);
        values.push(ensure_finite(f(w)?, w)?);
    }
    if !cfg.self_check {
        return Ok(trapezoid_coeffs(&values, cfg.radius, 0, order as i64));
    }

    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fine = trapezoid_coeffs(&values, cfg.radius, -2, order as i64);
    let coarse_values: Vec<Complex64> = values.iter().step_by(2).copied().collect();
    let coarse = trapezoid_coeffs(&coarse_values, cfg.radius, order as i64, order as i64)[0];

    for (j, c) in fine[..2].iter().enumerate() {
        let k = 2 - j as i32;
        let normalized = c.norm() * cfg.radius.powi(-k);
        if normalized > 1e-8 * scale.max(1e-300) {
            return Err(Error::Aliasing(format!(
                "principal-part coefficient c_-{k} = {normalized:e} relative to max |f| = {scale:e}; \
                 a singularity lies inside the contour"
            )));
        }
    }
    let top = fine[fine.len() - 1];
    let (a, b) = (top.norm(), coarse.norm());
    let floor = 1e-10 * scale * cfg.radius.powi(-(order as i32));
    if a.max(b) > floor {
        let ratio = a.max(b) / a.min(b).max(f64::MIN_POSITIVE);
        if ratio > 10.0 {
            return Err(Error::Aliasing(format!(
                "|c_{order}| estimates {b:e} ({} samples) and {a:e} ({m} samples) disagree",
                cfg.samples
            )));
        }
    }
    Ok(fine[2..].to_vec())
}

/// Counterclockwise trapezoid approximation of the contour integral of `f`
/// around the circle `|z - center| = radius`.
pub fn contour_integral<F>(f: F, center: Complex64, radius: f64, samples: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if radius.is_nan() || radius <= 0.0 || samples == 0 {
        return Err(Error::InvalidInput(
            "contour needs a positive radius and at least one sample".into(),
        ));
    }
    let mut acc = CompensatedSum::new();
    for j in 0..samples {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
        let z = center + radius * e;
        let v = ensure_finite(f(z)?, z)?;
        acc.add(v * I * radius * e);
    }
    Ok(acc.value() * (2.0 * PI / samples as f64))
}
