//! Trivialized fibers of the logarithm sheaves on the universal cover.
//!
//! A fiber at level `n` has basis `w[i,j]` with `i + j <= n`, the divided
//! powers of the classes `omega = [dw]` and `eta = [wp(w) dw]`. Products
//! follow `w[i,j] * w[k,l] = C(i+k, i) C(j+l, j) w[i+k, j+l]`.
//!
//! Connection formulas use `eta = zeta(z) - zeta(z + 1)`, see
//! [`crate::weierstrass::connection_eta`]. Indices that leave the triangle
//! `i + j <= n` (or go negative) are dropped.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{finite_diff, DiffConfig, TWO_PI_I};
use crate::weierstrass::{
    connection_eta, connection_eta_derivative, eta_derivative_config, ModuliPoint,
};

/// Largest level accepted by [`LogFiber::new`].
pub const MAX_LEVEL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DividedIndex {
    pub i: u32,
    pub j: u32,
}

impl DividedIndex {
    pub fn new(i: u32, j: u32) -> Self {
        Self { i, j }
    }

    pub fn degree(&self) -> u32 {
        self.i + self.j
    }

    /// Shifts by `(di, dj)`; `None` if an index would go negative.
    fn offset(&self, di: i64, dj: i64) -> Option<Self> {
        let i = self.i as i64 + di;
        let j = self.j as i64 + dj;
        (i >= 0 && j >= 0).then(|| Self::new(i as u32, j as u32))
    }
}

impl fmt::Display for DividedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.i, self.j)
    }
}

/// Sparse vector in the level-`n` fiber. Absent coefficients are zero.
#[derive(Debug, Clone)]
pub struct LogFiber {
    level: u32,
    coeffs: BTreeMap<DividedIndex, Complex64>,
}

impl PartialEq for LogFiber {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self
                .coeffs
                .keys()
                .chain(other.coeffs.keys())
                .all(|idx| self.get(*idx) == other.get(*idx))
    }
}

impl LogFiber {
    pub fn new(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidInput(format!(
                "level {level} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        Ok(Self::zero(level))
    }

    pub(crate) fn zero(level: u32) -> Self {
        Self {
            level,
            coeffs: BTreeMap::new(),
        }
    }

    /// The basis vector `w[i,j]` at level `n`.
    pub fn basis(level: u32, i: u32, j: u32) -> Result<Self> {
        let mut f = Self::new(level)?;
        if i + j > level {
            return Err(Error::InvalidInput(format!(
                "index [{i},{j}] lies outside level {level}"
            )));
        }
        f.coeffs.insert(DividedIndex::new(i, j), Complex64::new(1.0, 0.0));
        Ok(f)
    }

    /// All basis indices of level `n`, ordered by `(i, j)`.
    pub fn indices(level: u32) -> Vec<DividedIndex> {
        (0..=level)
            .flat_map(|i| (0..=level - i).map(move |j| DividedIndex::new(i, j)))
            .collect()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn get(&self, idx: DividedIndex) -> Complex64 {
        self.coeffs.get(&idx).copied().unwrap_or_default()
    }

    /// Sets a coefficient; fails outside the level triangle.
    pub fn set(&mut self, idx: DividedIndex, value: Complex64) -> Result<()> {
        if idx.degree() > self.level {
            return Err(Error::InvalidInput(format!(
                "index {idx} lies outside level {}",
                self.level
            )));
        }
        self.coeffs.insert(idx, value);
        Ok(())
    }

    /// Adds `value` at `idx`, dropping it silently outside the level triangle.
    pub(crate) fn accumulate(&mut self, idx: Option<DividedIndex>, value: Complex64) {
        if let Some(idx) = idx {
            if idx.degree() <= self.level {
                *self.coeffs.entry(idx).or_default() += value;
            }
        }
    }

    /// Stored `(index, coefficient)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (DividedIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| *c == Complex64::default())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }

    /// Coefficientwise sum; both fibers must share a level.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.level != other.level {
            return Err(Error::InvalidInput(format!(
                "cannot add fibers of levels {} and {}",
                self.level, other.level
            )));
        }
        let mut out = self.clone();
        for (k, v) in other.iter() {
            *out.coeffs.entry(k).or_default() += v;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Keeps the coefficients with `i + j <= m` at level `m`.
    pub fn truncate(&self, m: u32) -> Self {
        Self {
            level: m.min(self.level),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k.degree() <= m)
                .map(|(k, v)| (*k, *v))
                .collect(),
        }
    }

    /// The projection from level `n` to level `n - 1`.
    pub fn transition(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(Error::InvalidInput("transition is undefined at level 0".into()));
        }
        Ok(self.truncate(self.level - 1))
    }
}

/// A form of degree 0, 1 or 2 on the `(z, tau)` cover with values in a fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum LogValuedForm {
    Function(LogFiber),
    OneForm { dz: LogFiber, dtau: LogFiber },
    /// Coefficient of `dz ^ dtau`.
    TwoForm(LogFiber),
}

impl LogValuedForm {
    pub fn one_form(dz: LogFiber, dtau: LogFiber) -> Result<Self> {
        if dz.level() != dtau.level() {
            return Err(Error::InvalidInput(format!(
                "dz and dtau components have levels {} and {}",
                dz.level(),
                dtau.level()
            )));
        }
        Ok(Self::OneForm { dz, dtau })
    }

    pub fn level(&self) -> u32 {
        match self {
            Self::Function(f) | Self::TwoForm(f) => f.level(),
            Self::OneForm { dz, .. } => dz.level(),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Self::Function(_) => 0,
            Self::OneForm { .. } => 1,
            Self::TwoForm(_) => 2,
        }
    }

    pub fn dz(&self) -> Option<&LogFiber> {
        match self {
            Self::OneForm { dz, .. } => Some(dz),
            _ => None,
        }
    }

    pub fn dtau(&self) -> Option<&LogFiber> {
        match self {
            Self::OneForm { dtau, .. } => Some(dtau),
            _ => None,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Function(f) | Self::TwoForm(f) => f.max_abs(),
            Self::OneForm { dz, dtau } => dz.max_abs().max(dtau.max_abs()),
        }
    }

    pub fn transition(&self) -> Result<Self> {
        Ok(match self {
            Self::Function(f) => Self::Function(f.transition()?),
            Self::OneForm { dz, dtau } => Self::OneForm {
                dz: dz.transition()?,
                dtau: dtau.transition()?,
            },
            Self::TwoForm(f) => Self::TwoForm(f.transition()?),
        })
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Divided-power product; the result lives at level `n1 + n2`.
pub fn dp_multiply(a: &LogFiber, b: &LogFiber) -> LogFiber {
    let mut out = LogFiber::zero(a.level() + b.level());
    for (x, cx) in a.iter() {
        for (y, cy) in b.iter() {
            let weight = binomial(x.i + y.i, x.i) * binomial(x.j + y.j, x.j);
            out.accumulate(Some(DividedIndex::new(x.i + y.i, x.j + y.j)), weight * cx * cy);
        }
    }
    out
}

/// The scalar functions of `tau` entering the connection formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionData {
    pub eta: Complex64,
    pub eta_prime: Complex64,
}

impl ConnectionData {
    pub fn at(tau: &ModuliPoint) -> Result<Self> {
        Ok(Self {
            eta: connection_eta(tau)?,
            eta_prime: connection_eta_derivative(tau, &eta_derivative_config())?,
        })
    }
}

fn rel_basis(idx: DividedIndex, eta: Complex64, out: &mut LogFiber, c: Complex64) {
    let (k, j) = (idx.i as f64, idx.j as f64);
    out.accumulate(idx.offset(1, 0), -(k + 1.0) * eta * c);
    out.accumulate(idx.offset(0, 1), (j + 1.0) * c);
}

fn abs_dtau_basis(idx: DividedIndex, data: &ConnectionData, out: &mut LogFiber, c: Complex64) {
    let (k, j) = (idx.i as f64, idx.j as f64);
    let eta = data.eta;
    out.accumulate(Some(idx), (-eta * k + eta * j) / TWO_PI_I * c);
    out.accumulate(idx.offset(-1, 1), (j + 1.0) / TWO_PI_I * c);
    out.accumulate(
        idx.offset(1, -1),
        (data.eta_prime - eta * eta / TWO_PI_I) * (k + 1.0) * c,
    );
}

/// The relative connection: a one-form with only a `dz` component.
pub fn rel_connection(v: &LogFiber, tau: &ModuliPoint) -> Result<LogValuedForm> {
    rel_connection_with(v, connection_eta(tau)?)
}

pub fn rel_connection_with(v: &LogFiber, eta: Complex64) -> Result<LogValuedForm> {
    let mut dz = LogFiber::zero(v.level());
    for (idx, c) in v.iter() {
        rel_basis(idx, eta, &mut dz, c);
    }
    LogValuedForm::one_form(dz, LogFiber::zero(v.level()))
}

/// The absolute connection on the `(z, tau)` cover.
pub fn abs_connection(v: &LogFiber, tau: &ModuliPoint) -> Result<LogValuedForm> {
    abs_connection_with(v, &ConnectionData::at(tau)?)
}

pub fn abs_connection_with(v: &LogFiber, data: &ConnectionData) -> Result<LogValuedForm> {
    let mut dz = LogFiber::zero(v.level());
    let mut dtau = LogFiber::zero(v.level());
    for (idx, c) in v.iter() {
        rel_basis(idx, data.eta, &mut dz, c);
        abs_dtau_basis(idx, data, &mut dtau, c);
    }
    LogValuedForm::one_form(dz, dtau)
}

/// `dtau` coefficients of the Gauss-Manin connection in the basis
/// `(omega, eta)`; column `c` holds the image of basis vector `c`.
pub fn gauss_manin_matrix(tau: &ModuliPoint) -> Result<[[Complex64; 2]; 2]> {
    gauss_manin_matrix_with(&ConnectionData::at(tau)?)
}

pub fn gauss_manin_matrix_with(data: &ConnectionData) -> Result<[[Complex64; 2]; 2]> {
    let eta = data.eta;
    Ok([
        [-eta / TWO_PI_I, data.eta_prime - eta * eta / TWO_PI_I],
        [1.0 / TWO_PI_I, eta / TWO_PI_I],
    ])
}

/// Curvature of the absolute connection applied to each basis vector at
/// level `n`; returns the largest `dz ^ dtau` coefficient.
///
/// Writing `nabla e = X(e) dz + Y(e) dtau` with `tau`-dependent
/// coefficients, the curvature is
/// `(-d_tau X(e) - sum_i X_i(e) Y(e_i) + sum_i Y_i(e) X(e_i)) dz ^ dtau`.
pub fn curvature_residual(n: u32, tau: &ModuliPoint, cfg: &DiffConfig) -> Result<f64> {
    curvature_with(n, tau, cfg, ConnectionData::at)
}

fn curvature_with<P>(n: u32, tau: &ModuliPoint, cfg: &DiffConfig, provider: P) -> Result<f64>
where
    P: Fn(&ModuliPoint) -> Result<ConnectionData>,
{
    cfg.validate()?;
    if n > MAX_LEVEL {
        return Err(Error::InvalidInput(format!("level {n} exceeds {MAX_LEVEL}")));
    }
    let data = provider(tau)?;
    let image = |idx: DividedIndex, d: &ConnectionData| -> Result<(LogFiber, LogFiber)> {
        let mut e = LogFiber::zero(n);
        e.accumulate(Some(idx), Complex64::new(1.0, 0.0));
        match abs_connection_with(&e, d)? {
            LogValuedForm::OneForm { dz, dtau } => Ok((dz, dtau)),
            _ => unreachable!("abs_connection returns a one-form"),
        }
    };
    let basis = LogFiber::indices(n);
    let images: Vec<(LogFiber, LogFiber)> = basis
        .iter()
        .map(|idx| image(*idx, &data))
        .collect::<Result<_>>()?;
    let lookup = |idx: DividedIndex| &images[basis.iter().position(|b| *b == idx).unwrap()];

    let mut worst: f64 = 0.0;
    for (e, (x, y)) in basis.iter().zip(&images) {
        let mut curv = LogFiber::zero(n);
        for (target, _) in x.iter() {
            let d = finite_diff(
                |t| {
                    let d = provider(&ModuliPoint::new(t)?)?;
                    Ok(image(*e, &d)?.0.get(target))
                },
                tau.tau(),
                cfg,
            )?;
            curv.accumulate(Some(target), -d);
        }
        for (i, xi) in x.iter() {
            for (l, c) in lookup(i).1.iter() {
                curv.accumulate(Some(l), -xi * c);
            }
        }
        for (i, yi) in y.iter() {
            for (l, c) in lookup(i).0.iter() {
                curv.accumulate(Some(l), yi * c);
            }
        }
        worst = worst.max(curv.max_abs());
    }
    Ok(worst)
}

/// Lifts a relative one-form supported on the `w[k,0]` row to an absolute
/// one-form one level down: `c w[k,0] dz` becomes
/// `c w[k,0] dz + c/(2 pi i) w[k-1,0] dtau`.
pub fn ks_lift(form: &LogValuedForm) -> Result<LogValuedForm> {
    let (dz, dtau) = match form {
        LogValuedForm::OneForm { dz, dtau } => (dz, dtau),
        _ => {
            return Err(Error::InvalidInput(format!(
                "ks_lift expects a one-form, got degree {}",
                form.degree()
            )))
        }
    };
    if !dtau.is_zero() {
        return Err(Error::InvalidInput("ks_lift expects a relative form (no dtau part)".into()));
    }
    if dz.iter().any(|(idx, c)| idx.j > 0 && c != Complex64::default()) {
        return Err(Error::InvalidInput(
            "ks_lift is defined on forms supported on indices [k,0]".into(),
        ));
    }
    let level = dz
        .level()
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidInput("ks_lift needs input level at least 1".into()))?;
    let mut out_dz = LogFiber::zero(level);
    let mut out_dtau = LogFiber::zero(level);
    for (idx, c) in dz.iter() {
        out_dz.accumulate(Some(idx), c);
        out_dtau.accumulate(idx.offset(-1, 0), c / TWO_PI_I);
    }
    LogValuedForm::one_form(out_dz, out_dtau)
}
