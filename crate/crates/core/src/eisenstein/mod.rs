//! Level-N Eisenstein series
//!
//! ```text
//! F^(k)_(a,b)(tau) = (-1)^{k+1} (k-1)! sum'_{(m,n)} zeta_N^{mb - na} / (m tau + n)^k
//! ```
//!
//! and their D-variants `F~ = D^2 F_(a,b) - D^{2-k} F_(Da,Db)`.
//!
//! Two evaluators are provided. The naive one sums the lattice directly; under
//! Eisenstein ordering each inner row is completed to infinity by an
//! asymptotic tail, so weights 1 and 2 are summed in the Eisenstein
//! convention. The Lipschitz evaluator sums every inner row in closed form and
//! the rows then decay geometrically in `|m|`.

pub(crate) mod lipschitz;
pub(crate) mod tail;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    lattice_sum, lattice_sum_rows, Accumulator, CompensatedSum, LatticeOrdering,
    LatticeTruncation, TWO_PI_I,
};
use crate::weierstrass::ModuliPoint;
use lipschitz::Phase;

/// Row magnitudes below this fraction of the running total end the outer sum.
const ROW_CUTOFF: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    Naive,
    Lipschitz,
}

impl std::str::FromStr for SumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(SumMode::Naive),
            "lipschitz" => Ok(SumMode::Lipschitz),
            other => Err(Error::InvalidInput(format!(
                "unknown summation mode {other:?} (expected naive or lipschitz)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EisensteinQuery {
    pub a: i64,
    pub b: i64,
    pub level: i64,
    pub k: u32,
    pub tau: ModuliPoint,
    pub trunc: LatticeTruncation,
    pub mode: SumMode,
}

impl EisensteinQuery {
    pub fn new(
        a: i64,
        b: i64,
        level: i64,
        k: u32,
        tau: ModuliPoint,
        trunc: LatticeTruncation,
        mode: SumMode,
    ) -> Result<Self> {
        let q = Self {
            a: a.rem_euclid(level.max(1)),
            b: b.rem_euclid(level.max(1)),
            level,
            k,
            tau,
            trunc,
            mode,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.level < 2 {
            return Err(Error::InvalidInput(format!("level N must be at least 2, got {}", self.level)));
        }
        if self.k == 0 {
            return Err(Error::InvalidInput("weight k must be at least 1".into()));
        }
        if self.a.rem_euclid(self.level) == 0 && self.b.rem_euclid(self.level) == 0 {
            return Err(Error::InvalidInput("label (a, b) must be nonzero modulo N".into()));
        }
        self.trunc.validate()?;
        if self.k <= 2 && self.mode == SumMode::Naive && self.trunc.ordering == LatticeOrdering::Box {
            return Err(Error::ModeMismatch(format!(
                "weight {} is conditionally convergent; use Eisenstein ordering or Lipschitz mode",
                self.k
            )));
        }
        if self.k == 1 && self.a.rem_euclid(self.level) == 0 {
            return Err(Error::Convergence(
                "weight 1 with a = 0 mod N has no Eisenstein-summed value".into(),
            ));
        }
        Ok(())
    }

    /// The same query with label `(a, b)` replaced.
    pub fn with_label(&self, a: i64, b: i64) -> Result<Self> {
        Self::new(a, b, self.level, self.k, self.tau, self.trunc, self.mode)
    }

    fn alpha(&self) -> Phase {
        Phase::new(-self.a, self.level)
    }

    fn row_phase(&self, m: i64) -> Complex64 {
        (TWO_PI_I * (m * self.b).rem_euclid(self.level) as f64 / self.level as f64).exp()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(-1)^{k+1} (k-1)!`.
fn prefactor(k: u32) -> f64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * factorial(k - 1)
}

/// The bare sum `sum' zeta_N^{mb - na} (m tau + n)^{-k}` by direct summation.
fn naive_sum(q: &EisensteinQuery) -> Complex64 {
    let t = q.tau.tau();
    let k = q.k as i32;
    let alpha = q.alpha().value();
    let col_phase = |n: i64| {
        (TWO_PI_I * (-n * q.a).rem_euclid(q.level) as f64 / q.level as f64).exp()
    };
    match q.trunc.ordering {
        LatticeOrdering::Box => lattice_sum(&q.trunc, |m, n| {
            q.row_phase(m) * col_phase(n) * (m as f64 * t + n as f64).powi(-k)
        }),
        LatticeOrdering::Eisenstein => {
            let radius = q.trunc.shell_radius as i64;
            lattice_sum_rows(&q.trunc, |m, cols| {
                let x = m as f64 * t;
                let mut acc = Accumulator::new(q.trunc.compensated_summation);
                for &n in cols {
                    acc.add(col_phase(n) * (x + n as f64).powi(-k));
                }
                acc.add(tail::row_tail(x, alpha, q.k, radius));
                q.row_phase(m) * acc.value()
            })
        }
    }
}

/// The bare sum with each inner row in closed form.
fn lipschitz_sum(q: &EisensteinQuery) -> Result<Complex64> {
    let t = q.tau.tau();
    let alpha = q.alpha();
    let mut acc = CompensatedSum::new();
    acc.add(lipschitz::origin_row(alpha, q.k));
    // slowest row decay is exp(-2 pi |m| f Im tau)
    let f = if alpha.is_zero() {
        1.0
    } else {
        alpha.value().min(1.0 - alpha.value())
    };
    let max_rows = (45.0 / (2.0 * PI * f * t.im)).ceil() as i64 + 2;
    for m in 1..=max_rows {
        let upper = q.row_phase(m) * lipschitz::twisted_row(m as f64 * t, alpha, q.k)?;
        let lower = q.row_phase(-m) * lipschitz::twisted_row(-(m as f64) * t, alpha, q.k)?;
        acc.add(upper);
        acc.add(lower);
        if upper.norm() + lower.norm() <= ROW_CUTOFF * acc.value().norm() {
            break;
        }
    }
    Ok(acc.value())
}

/// `F^(k)_(a,b)(tau)`.
pub fn eisenstein_f(q: &EisensteinQuery) -> Result<Complex64> {
    q.validate()?;
    let bare = match q.mode {
        SumMode::Naive => naive_sum(q),
        SumMode::Lipschitz => lipschitz_sum(q)?,
    };
    crate::error::ensure_finite(prefactor(q.k) * bare, q.tau.tau())
}

/// `F~^(k)_(a,b) = D^2 F^(k)_(a,b) - D^{2-k} F^(k)_(Da,Db)`.
pub fn eisenstein_f_tilde(q: &EisensteinQuery, d: u32) -> Result<Complex64> {
    q.validate()?;
    if d == 0 {
        return Err(Error::InvalidInput("D must be at least 1".into()));
    }
    let di = d as i64;
    let (da, db) = ((di * q.a).rem_euclid(q.level), (di * q.b).rem_euclid(q.level));
    if da == 0 && db == 0 {
        return Err(Error::DegenerateLabel {
            a: q.a,
            b: q.b,
            n: q.level,
            d: di,
        });
    }
    let df = d as f64;
    let base = eisenstein_f(q)?;
    let scaled = eisenstein_f(&q.with_label(da, db)?)?;
    Ok(df * df * base - df.powi(2 - q.k as i32) * scaled)
}

/// `F^(2)_(a,b)` under Eisenstein summation. The value depends on the
/// summation order; box ordering is rejected.
pub fn eisenstein_sum_k2(
    a: i64,
    b: i64,
    level: i64,
    tau: &ModuliPoint,
    trunc: &LatticeTruncation,
) -> Result<Complex64> {
    if trunc.ordering != LatticeOrdering::Eisenstein {
        return Err(Error::ModeMismatch(
            "weight 2 requires Eisenstein ordering".into(),
        ));
    }
    eisenstein_f(&EisensteinQuery::new(a, b, level, 2, *tau, *trunc, SumMode::Naive)?)
}
