//! The Kronecker sections `l_n^D`, their absolute lifts `L_n^D`, closedness
//! of `L_n^D` and the specialization at torsion points.
//!
//! ```text
//! l_n^D = sum_{k<=n} k! s_k^D(z, tau) w[k,0] dz
//! L_n^D = sum_{k<=n} ( k! s_k^D w[k,0] dz + (k+1)!/(2 pi i) s_{k+1}^D w[k,0] dtau )
//! ```

use num_complex::Complex64;

use crate::eisenstein::lipschitz::{self, Phase};
use crate::eisenstein::{tail, SumMode};
use crate::error::{Error, Result};
use crate::kronecker::{default_s_cauchy, s_coeffs};
use crate::logsheaf::{abs_connection_with, ks_lift, ConnectionData, DividedIndex, LogFiber, LogValuedForm};
use crate::numerics::{
    finite_diff_vec, lattice_sum_rows, Accumulator, CauchyConfig, CompensatedSum, DiffConfig,
    LatticeOrdering, LatticeTruncation, TWO_PI_I,
};
use crate::weierstrass::ModuliPoint;

/// Evaluation points closer than this to a D-torsion point are rejected.
pub const TORSION_MARGIN: f64 = 1e-6;

/// A torsion section `(a tau + b)/N`-type label together with the auxiliary
/// integer `D` of the D-variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorsionLabel {
    pub a: i64,
    pub b: i64,
    pub level: i64,
    pub d: u32,
}

impl TorsionLabel {
    pub fn new(a: i64, b: i64, level: i64, d: u32) -> Result<Self> {
        if level < 2 {
            return Err(Error::InvalidInput(format!("level N must be at least 2, got {level}")));
        }
        if d == 0 {
            return Err(Error::InvalidInput("D must be at least 1".into()));
        }
        let (a, b) = (a.rem_euclid(level), b.rem_euclid(level));
        if (a, b) == (0, 0) {
            return Err(Error::InvalidInput("label (a, b) must be nonzero modulo N".into()));
        }
        Ok(Self { a, b, level, d })
    }

    pub fn negated(&self) -> Self {
        Self {
            a: (-self.a).rem_euclid(self.level),
            b: (-self.b).rem_euclid(self.level),
            ..*self
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn check_torsion_distance(z: Complex64, tau: &ModuliPoint, d: u32) -> Result<()> {
    let df = d as f64;
    let distance = tau.lattice_distance(df * z) / df;
    if distance < TORSION_MARGIN {
        return Err(Error::PoleProximity { z, distance });
    }
    Ok(())
}

fn s_vector(z: Complex64, tau: &ModuliPoint, d: u32, order: usize, cfg: &CauchyConfig) -> Result<Vec<Complex64>> {
    Ok(s_coeffs(z, tau, d, order, cfg)?.coeffs)
}

/// `l_n^D` with an explicit contour for the Taylor coefficients.
pub fn l_form_with(z: Complex64, tau: &ModuliPoint, d: u32, n: u32, cfg: &CauchyConfig) -> Result<LogValuedForm> {
    check_torsion_distance(z, tau, d)?;
    let s = s_vector(z, tau, d, n as usize, cfg)?;
    let mut dz = LogFiber::new(n)?;
    for (k, sk) in s.iter().enumerate() {
        dz.set(DividedIndex::new(k as u32, 0), factorial(k as u32) * sk)?;
    }
    LogValuedForm::one_form(dz, LogFiber::new(n)?)
}

pub fn l_form(z: Complex64, tau: &ModuliPoint, d: u32, n: u32) -> Result<LogValuedForm> {
    l_form_with(z, tau, d, n, &default_s_cauchy(tau))
}

/// `L_n^D`, the lift of `l_{n+1}^D`.
#[allow(non_snake_case)]
pub fn L_form_with(z: Complex64, tau: &ModuliPoint, d: u32, n: u32, cfg: &CauchyConfig) -> Result<LogValuedForm> {
    ks_lift(&l_form_with(z, tau, d, n + 1, cfg)?)
}

#[allow(non_snake_case)]
pub fn L_form(z: Complex64, tau: &ModuliPoint, d: u32, n: u32) -> Result<LogValuedForm> {
    L_form_with(z, tau, d, n, &default_s_cauchy(tau))
}

/// Row coefficients `(A_k, B_k)` of a one-form `sum_k w[k,0] (A_k dz + B_k dtau)`.
type RowCoeffs = (Vec<Complex64>, Vec<Complex64>);

/// `(A_k, B_k)` of `L_n^D`: `A_k = k! s_k`, `B_k = (k+1)! s_{k+1} / (2 pi i)`.
fn absolute_rows(s: &[Complex64], n: usize) -> RowCoeffs {
    let a = (0..=n).map(|k| factorial(k as u32) * s[k]).collect();
    let b = (0..=n)
        .map(|k| factorial(k as u32 + 1) * s[k + 1] / TWO_PI_I)
        .collect();
    (a, b)
}

/// Relative size of the `dz ^ dtau` coefficient of `nabla(L)` for
/// `L = sum_k w[k,0] (A_k dz + B_k dtau)`, where `rows(z, tau)` gives the
/// coefficients. With `nabla w[k,0] = X_k dz + Y_k dtau`,
///
/// ```text
/// nabla(L) = sum_k [ w[k,0] (-d_tau A_k + d_z B_k) - A_k Y_k + B_k X_k ] dz ^ dtau.
/// ```
fn closedness_with<R>(z: Complex64, tau: &ModuliPoint, n: u32, cfg: &DiffConfig, rows: R) -> Result<f64>
where
    R: Fn(Complex64, &ModuliPoint) -> Result<RowCoeffs>,
{
    cfg.validate()?;
    let len = n as usize + 1;
    let flat = |(a, b): RowCoeffs| -> Vec<Complex64> { a.into_iter().chain(b).collect() };
    let (a, b) = rows(z, tau)?;
    let d_tau = finite_diff_vec(|t| Ok(flat(rows(z, &ModuliPoint::new(t)?)?)), tau.tau(), cfg)?;
    let d_z = finite_diff_vec(|w| Ok(flat(rows(w, tau)?)), z, cfg)?;
    let data = ConnectionData::at(tau)?;

    let mut out = LogFiber::new(n)?;
    for k in 0..len {
        let idx = DividedIndex::new(k as u32, 0);
        out.accumulate(Some(idx), -d_tau[k] + d_z[len + k]);
        let image = abs_connection_with(&LogFiber::basis(n, k as u32, 0)?, &data)?;
        let (x, y) = (image.dz().unwrap(), image.dtau().unwrap());
        for (i, c) in y.iter() {
            out.accumulate(Some(i), -a[k] * c);
        }
        for (i, c) in x.iter() {
            out.accumulate(Some(i), b[k] * c);
        }
    }
    let scale = a.iter().chain(&b).map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(out.max_abs());
    }
    Ok(out.max_abs() / scale)
}

/// Closedness of `L_n^D` under the absolute connection, normalized by the
/// largest coefficient of `L_n^D`.
pub fn closedness_residual(z: Complex64, tau: &ModuliPoint, d: u32, n: u32, cfg: &DiffConfig) -> Result<f64> {
    closedness_residual_with(z, tau, d, n, cfg, &default_s_cauchy(tau))
}

/// [`closedness_residual`] with an explicit contour for the Taylor
/// coefficients, shared by every stencil point.
pub fn closedness_residual_with(
    z: Complex64,
    tau: &ModuliPoint,
    d: u32,
    n: u32,
    cfg: &DiffConfig,
    cauchy: &CauchyConfig,
) -> Result<f64> {
    check_torsion_distance(z, tau, d)?;
    let margin = 10.0 * cfg.step;
    tau.check_away_from_lattice(z, margin)?;
    tau.check_away_from_lattice(d as f64 * z, d as f64 * margin)?;
    let len = n as usize;
    closedness_with(z, tau, n, cfg, |w, t| {
        Ok(absolute_rows(&s_vector(w, t, d, len + 1, cauchy)?, len))
    })
}

/// Sum of one specialization row over `n` by direct summation.
fn naive_row(y: Complex64, alpha: Phase, s: u32, trunc: &LatticeTruncation) -> Complex64 {
    let radius = trunc.shell_radius as i64;
    let mut acc = Accumulator::new(trunc.compensated_summation);
    for n in -radius..=radius {
        let phase = (TWO_PI_I * (alpha.num * n).rem_euclid(alpha.den) as f64 / alpha.den as f64).exp();
        acc.add(phase * (y + n as f64).powi(-(s as i32)));
    }
    if trunc.ordering == LatticeOrdering::Eisenstein {
        acc.add(tail::row_tail(y, alpha.value(), s, radius));
    }
    acc.value()
}

/// The torsion-shifted lattice sum
///
/// ```text
/// (-1)^k k! D^{1-k} sum_{(c,d) != 0 mod D} sum_{(m,n)}
///     zeta_N^{(Dm+c) b - (Dn+d) a} / (m tau + n + (c tau + d)/D)^{k+1}
/// ```
///
/// which equals `D^2 F^(k+1)_(a,b) - D^{1-k} F^(k+1)_(Da,Db)`.
pub fn specialize_eisenstein(
    label: &TorsionLabel,
    tau: &ModuliPoint,
    k: u32,
    trunc: &LatticeTruncation,
    mode: SumMode,
) -> Result<Complex64> {
    trunc.validate()?;
    let big_d = label.d as i64;
    let n_level = label.level;
    let s = k + 1;
    let alpha = Phase::new(-big_d * label.a, n_level);
    if k <= 1 && mode == SumMode::Naive && trunc.ordering == LatticeOrdering::Box {
        return Err(Error::ModeMismatch(format!(
            "k = {k} is conditionally convergent; use Eisenstein ordering or Lipschitz mode"
        )));
    }
    if k == 0 && alpha.is_zero() {
        return Err(Error::Convergence(
            "k = 0 with D a = 0 mod N has no Eisenstein-summed value".into(),
        ));
    }
    let t = tau.tau();
    let df = label.d as f64;
    let character = |m: i64, c: i64, d: i64| {
        let e = ((big_d * m + c) * label.b - d * label.a).rem_euclid(n_level);
        (TWO_PI_I * e as f64 / n_level as f64).exp()
    };
    let mut total = CompensatedSum::new();
    for c in 0..big_d {
        for d in 0..big_d {
            if (c, d) == (0, 0) {
                continue;
            }
            let shift = (c as f64 * t + d as f64) / df;
            let part = match mode {
                SumMode::Naive => lattice_sum_rows(trunc, |m, _| {
                    character(m, c, d) * naive_row(m as f64 * t + shift, alpha, s, trunc)
                }),
                SumMode::Lipschitz => {
                    let row = |m: i64| -> Result<Complex64> {
                        let y = m as f64 * t + shift;
                        let v = if m == 0 && c == 0 {
                            lipschitz::shifted_real_row(d, big_d, alpha, s)
                        } else {
                            lipschitz::twisted_row(y, alpha, s)?
                        };
                        Ok(character(m, c, d) * v)
                    };
                    let mut acc = CompensatedSum::new();
                    acc.add(row(0)?);
                    let f = if alpha.is_zero() {
                        1.0
                    } else {
                        alpha.value().min(1.0 - alpha.value())
                    };
                    let max_rows = (45.0 / (2.0 * std::f64::consts::PI * f * t.im)).ceil() as i64 + 2;
                    for m in 1..=max_rows {
                        let (up, down) = (row(m)?, row(-m)?);
                        acc.add(up);
                        acc.add(down);
                        if up.norm() + down.norm() <= 1e-17 * acc.value().norm() {
                            break;
                        }
                    }
                    acc.value()
                }
            };
            total.add(part);
        }
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let value = sign * factorial(k) * df.powi(1 - k as i32) * total.value();
    crate::error::ensure_finite(value, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::{eisenstein_f, eisenstein_f_tilde, EisensteinQuery};
    use crate::kronecker::dlog_kato_siegel;
    use crate::weierstrass::zeta_fn;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(re: f64, im: f64) -> ModuliPoint {
        ModuliPoint::new(c(re, im)).unwrap()
    }

    fn idx(i: u32, j: u32) -> DividedIndex {
        DividedIndex::new(i, j)
    }

    #[test]
    fn level_zero_is_kato_siegel_dlog() {
        let tau = mp(0.1, 1.1);
        let z = c(0.23, 0.11);
        for d in [2u32, 3] {
            let l = l_form(z, &tau, d, 0).unwrap();
            let got = l.dz().unwrap().get(idx(0, 0));
            let want = dlog_kato_siegel(z, &tau, d).unwrap();
            assert!((got - want).norm() < 1e-10 * want.norm());
            let df = d as f64;
            let zeta = df * df * zeta_fn(z, &tau).unwrap() - df * zeta_fn(df * z, &tau).unwrap();
            assert!((got - zeta).norm() < 1e-8 * zeta.norm());
        }
    }

    #[test]
    fn l_form_transition_and_trivial_d() {
        let tau = mp(0.0, 1.2);
        let z = c(0.23, 0.0);
        let l3 = l_form(z, &tau, 2, 3).unwrap();
        let l2 = l_form(z, &tau, 2, 2).unwrap();
        assert!(l3.transition().unwrap().dz().unwrap().sub(l2.dz().unwrap()).unwrap().max_abs() < 1e-12);
        assert_eq!(l_form(z, &tau, 1, 3).unwrap().max_abs(), 0.0);
        for (ix, _) in l3.dz().unwrap().iter() {
            assert_eq!(ix.j, 0);
        }
    }

    #[test]
    fn absolute_form_coefficients() {
        let tau = mp(0.0, 1.2);
        let z = c(0.23, 0.05);
        let s = s_coeffs(z, &tau, 2, 4, &default_s_cauchy(&tau)).unwrap().coeffs;
        let big = L_form(z, &tau, 2, 3).unwrap();
        for k in 0..=3u32 {
            let a = big.dz().unwrap().get(idx(k, 0));
            let b = big.dtau().unwrap().get(idx(k, 0));
            assert!((a - factorial(k) * s[k as usize]).norm() < 1e-12 * a.norm().max(1.0));
            let want = factorial(k + 1) * s[k as usize + 1] / TWO_PI_I;
            assert!((b - want).norm() < 1e-12 * want.norm().max(1.0));
        }
        let l = l_form(z, &tau, 2, 3).unwrap();
        assert_eq!(big.dz().unwrap(), &l.dz().unwrap().truncate(3));
        let l0 = L_form(z, &tau, 2, 0).unwrap();
        assert!((l0.dtau().unwrap().get(idx(0, 0)) - s[1] / TWO_PI_I).norm() < 1e-12);
    }

    #[test]
    fn absolute_form_transition_chain() {
        let tau = mp(0.1, 1.0);
        let z = c(0.3, 0.1);
        let top = L_form(z, &tau, 3, 6).unwrap();
        let mut cur = top;
        for m in (0..6).rev() {
            cur = cur.transition().unwrap();
            let direct = L_form(z, &tau, 3, m).unwrap();
            let diff = cur.dz().unwrap().sub(direct.dz().unwrap()).unwrap().max_abs()
                + cur.dtau().unwrap().sub(direct.dtau().unwrap()).unwrap().max_abs();
            assert!(diff <= 1e-12 * direct.max_abs(), "m={m}: {diff:e}");
        }
    }

    #[test]
    fn torsion_points_rejected() {
        let tau = mp(0.0, 1.0);
        let z = c(0.5, 0.0);
        assert!(matches!(l_form(z, &tau, 2, 1), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn closedness_examples() {
        let cfg = DiffConfig::default();
        let r = closedness_residual(c(0.23, 0.0), &mp(0.0, 1.2), 2, 2, &cfg).unwrap();
        assert!(r < 1e-5, "{r:e}");
        let r0 = closedness_residual(c(0.31, 0.12), &mp(0.2, 1.0), 3, 0, &cfg).unwrap();
        assert!(r0 < 1e-6, "{r0:e}");
    }

    #[test]
    fn closedness_is_sensitive_to_perturbation() {
        let cfg = DiffConfig::default();
        let tau = mp(0.0, 1.2);
        let z = c(0.23, 0.0);
        let cauchy = default_s_cauchy(&tau);
        let exact = |w: Complex64, t: &ModuliPoint| -> Result<RowCoeffs> {
            Ok(absolute_rows(&s_vector(w, t, 2, 3, &cauchy)?, 2))
        };
        let (a, b) = exact(z, &tau).unwrap();
        let scale = a.iter().chain(&b).map(|v| v.norm()).fold(0.0, f64::max);
        let bumped = |w: Complex64, t: &ModuliPoint| -> Result<RowCoeffs> {
            let (mut a, b) = exact(w, t)?;
            a[1] += 1e-3 * scale;
            Ok((a, b))
        };
        let base = closedness_with(z, &tau, 2, &cfg, exact).unwrap();
        let r = closedness_with(z, &tau, 2, &cfg, bumped).unwrap();
        assert!(base < 1e-5 && r > 1e-4, "{base:e} {r:e}");
        // at level 0 only a tau-dependent change is visible
        let drift = |w: Complex64, t: &ModuliPoint| -> Result<RowCoeffs> {
            let (mut a, b) = absolute_rows(&s_vector(w, t, 2, 1, &cauchy)?, 0);
            a[0] += 1e-3 * scale * t.tau();
            Ok((a, b))
        };
        assert!(closedness_with(z, &tau, 0, &cfg, drift).unwrap() > 1e-4);
    }

    fn f_tilde(label: &TorsionLabel, tau: &ModuliPoint, weight: u32) -> Complex64 {
        let q = EisensteinQuery::new(
            label.a,
            label.b,
            label.level,
            weight,
            *tau,
            LatticeTruncation::default(),
            SumMode::Lipschitz,
        )
        .unwrap();
        eisenstein_f_tilde(&q, label.d).unwrap()
    }

    #[test]
    fn specialization_matches_f_tilde() {
        let tau = mp(0.0, 1.3);
        let label = TorsionLabel::new(1, 0, 4, 2).unwrap();
        let trunc = LatticeTruncation::default();
        for k in [1u32, 2, 3, 4] {
            let s = specialize_eisenstein(&label, &tau, k, &trunc, SumMode::Lipschitz).unwrap();
            let f = f_tilde(&label, &tau, k + 1);
            assert!((s - f).norm() < 1e-9 * f.norm(), "k={k}: {s} vs {f}");
        }
    }

    #[test]
    fn specialization_naive_mode_agrees() {
        let tau = mp(0.2, 1.1);
        let label = TorsionLabel::new(1, 2, 5, 3).unwrap();
        let trunc = LatticeTruncation::eisenstein(60);
        for k in [1u32, 2, 3] {
            let n = specialize_eisenstein(&label, &tau, k, &trunc, SumMode::Naive).unwrap();
            let l = specialize_eisenstein(&label, &tau, k, &trunc, SumMode::Lipschitz).unwrap();
            assert!((n - l).norm() < 1e-8 * l.norm(), "k={k}: {n} vs {l}");
        }
    }

    #[test]
    fn specialization_parity_and_trivial_d() {
        let tau = mp(-0.1, 1.0);
        let trunc = LatticeTruncation::default();
        let label = TorsionLabel::new(1, 1, 3, 2).unwrap();
        for k in [2u32, 3] {
            let s = specialize_eisenstein(&label, &tau, k, &trunc, SumMode::Lipschitz).unwrap();
            let t = specialize_eisenstein(&label.negated(), &tau, k, &trunc, SumMode::Lipschitz).unwrap();
            let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((t - sign * s).norm() < 1e-9 * s.norm());
        }
        let one = TorsionLabel::new(1, 1, 3, 1).unwrap();
        assert_eq!(
            specialize_eisenstein(&one, &tau, 2, &trunc, SumMode::Lipschitz).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn specialization_reduces_to_level_sums() {
        // D^2 F_(a,b) - D^{1-k} F_(Da,Db) assembled from eisenstein_f directly
        let tau = mp(0.3, 0.9);
        let label = TorsionLabel::new(2, 1, 5, 3).unwrap();
        let k = 3u32;
        let q = EisensteinQuery::new(2, 1, 5, k + 1, tau, LatticeTruncation::default(), SumMode::Lipschitz).unwrap();
        let want = 9.0 * eisenstein_f(&q).unwrap()
            - 3f64.powi(1 - k as i32) * eisenstein_f(&q.with_label(6, 3).unwrap()).unwrap();
        let got = specialize_eisenstein(&label, &tau, k, &LatticeTruncation::default(), SumMode::Lipschitz).unwrap();
        assert!((got - want).norm() < 1e-9 * want.norm());
    }
}
