//! The theta kernel and the Kronecker-Jacobi function.
//!
//! `theta(z) = theta_1(z|tau) / theta_1'(0|tau)` is odd, has simple zeros
//! exactly on `Z + tau Z`, and satisfies
//!
//! ```text
//! theta(z + 1)   = -theta(z)
//! theta(z + tau) = -exp(-pi i tau - 2 pi i z) theta(z)
//! ```
//!
//! Equivalently `theta(z) = exp(-eta1 z^2 / 2) sigma(z)` with the classical
//! quasi-period `eta1 = zeta(z + 1) - zeta(z)`.
//!
//! `J(z, w) = theta(z + w) / (theta(z) theta(w))` then obeys the mixed heat
//! equation `2 pi i dJ/dtau = d^2 J / dz dw`, and the D-variant
//! `D^2 J(z, w) - D J(Dz, w/D)` is holomorphic at `w = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use crate::error::{ensure_finite, Error, Result};
use crate::numerics::{
    cauchy_coeffs, contour_integral, finite_diff, CauchyConfig, DiffConfig, I, TWO_PI_I,
};
use crate::weierstrass::{ModuliPoint, POLE_THRESHOLD};

/// Largest Taylor index returned by [`s_coeffs`] without an explicit override.
pub const MAX_S_ORDER: usize = 16;

/// `theta(z0)` and the first three derivatives of `log theta` at a point of
/// the centered period parallelogram.
struct ReducedTheta {
    value: Complex64,
    d1: Complex64,
    d2: Complex64,
    d3: Complex64,
}

fn reduced_theta(z0: Complex64, tau: &ModuliPoint, want_value: bool) -> Result<ReducedTheta> {
    let terms = tau.q_terms()?;
    let q = tau.nome();
    let x = (TWO_PI_I * z0).exp();
    let xinv = x.inv();
    let pz = PI * z0;
    let (s, c) = (pz.sin(), pz.cos());
    let cot = c / s;
    let csc2 = (s * s).inv();

    let mut value = if want_value {
        s / PI
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut sum1 = Complex64::new(0.0, 0.0);
    let mut sum2 = Complex64::new(0.0, 0.0);
    let mut sum3 = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for _ in 0..terms {
        qn *= q;
        let u = qn * x;
        let v = qn * xinv;
        let (ou, ov) = (1.0 - u, 1.0 - v);
        if want_value {
            let oq = 1.0 - qn;
            value *= ou * ov / (oq * oq);
        }
        sum1 += v / ov - u / ou;
        sum2 += u / (ou * ou) + v / (ov * ov);
        sum3 += u * (1.0 + u) / (ou * ou * ou) - v * (1.0 + v) / (ov * ov * ov);
        if u.norm().max(v.norm()) < 1e-18 {
            break;
        }
    }
    Ok(ReducedTheta {
        value,
        d1: PI * cot + TWO_PI_I * sum1,
        d2: -PI * PI * csc2 + 4.0 * PI * PI * sum2,
        d3: 2.0 * PI.powi(3) * cot * csc2 + 8.0 * PI.powi(3) * I * sum3,
    })
}

/// The normalized odd theta function by q-product.
pub fn theta(z: Complex64, tau: &ModuliPoint) -> Result<Complex64> {
    let (z0, c, d) = tau.reduce(z);
    let r = reduced_theta(z0, tau, true)?;
    let cf = c as f64;
    let sign = if (c + d).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let factor = (-PI * I * cf * cf * tau.tau() - TWO_PI_I * cf * z0).exp();
    ensure_finite(sign * factor * r.value, z)
}

/// Logarithmic derivatives of `theta`: `theta'/theta` and its next two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaLogDerivatives {
    pub first: Complex64,
    pub second: Complex64,
    pub third: Complex64,
}

pub fn theta_log_derivatives(z: Complex64, tau: &ModuliPoint) -> Result<ThetaLogDerivatives> {
    let (z0, c, _) = tau.reduce(z);
    let r = reduced_theta(z0, tau, false)?;
    Ok(ThetaLogDerivatives {
        first: ensure_finite(r.d1 - TWO_PI_I * c as f64, z)?,
        second: ensure_finite(r.d2, z)?,
        third: ensure_finite(r.d3, z)?,
    })
}

/// `(z, w, tau)` on the universal cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KroneckerPoint {
    pub z: Complex64,
    pub w: Complex64,
    pub tau: ModuliPoint,
}

impl KroneckerPoint {
    pub fn new(z: Complex64, w: Complex64, tau: ModuliPoint) -> Self {
        Self { z, w, tau }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.w, self.z, self.tau)
    }
}

/// `J(z, w) = theta(z + w) / (theta(z) theta(w))`.
///
/// Fails near poles (`z` or `w` on the lattice); `z + w` on the lattice is a
/// zero and returns a small value.
pub fn jacobi_j(p: &KroneckerPoint) -> Result<Complex64> {
    p.tau.check_away_from_lattice(p.z, POLE_THRESHOLD)?;
    p.tau.check_away_from_lattice(p.w, POLE_THRESHOLD)?;
    let num = theta(p.z + p.w, &p.tau)?;
    let den = theta(p.z, &p.tau)? * theta(p.w, &p.tau)?;
    ensure_finite(num / den, p.z)
}

fn j_at(z: Complex64, w: Complex64, tau: &ModuliPoint) -> Result<Complex64> {
    jacobi_j(&KroneckerPoint::new(z, w, *tau))
}

/// Multiplier `chi` with `J(z + c tau + d, w) = chi J(z, w)`, namely
/// `chi = exp(-2 pi i c w)`. By symmetry the same factor, with `z` in place of
/// `w`, translates the second argument.
pub fn quasi_period_factor(c: i64, d: i64, p: &KroneckerPoint) -> Result<Complex64> {
    let _ = d;
    p.tau.check_away_from_lattice(p.z, POLE_THRESHOLD)?;
    p.tau.check_away_from_lattice(p.w, POLE_THRESHOLD)?;
    Ok((-TWO_PI_I * c as f64 * p.w).exp())
}

/// `d^2 J / dz dw = J ((L(z+w) - L(z)) (L(z+w) - L(w)) + L'(z+w))` with
/// `L = theta'/theta`.
pub fn mixed_derivative(p: &KroneckerPoint) -> Result<Complex64> {
    let j = jacobi_j(p)?;
    let lz = theta_log_derivatives(p.z, &p.tau)?;
    let lw = theta_log_derivatives(p.w, &p.tau)?;
    let ls = theta_log_derivatives(p.z + p.w, &p.tau)?;
    ensure_finite(j * ((ls.first - lz.first) * (ls.first - lw.first) + ls.second), p.z)
}

/// `|2 pi i dJ/dtau - d^2J/dz dw| / max(1, |J|)`.
///
/// The `tau` derivative is a finite difference; the spatial one is
/// [`mixed_derivative`], since a nested second difference at the default
/// step loses about 1e-6 to rounding.
pub fn heat_residual(p: &KroneckerPoint, cfg: &DiffConfig) -> Result<f64> {
    cfg.validate()?;
    let margin = 10.0 * cfg.step;
    p.tau.check_away_from_lattice(p.z, margin)?;
    p.tau.check_away_from_lattice(p.w, margin)?;
    let j = jacobi_j(p)?;
    let d_tau = finite_diff(|t| j_at(p.z, p.w, &ModuliPoint::new(t)?), p.tau.tau(), cfg)?;
    let d_zw = mixed_derivative(p)?;
    Ok((TWO_PI_I * d_tau - d_zw).norm() / j.norm().max(1.0))
}

/// Taylor coefficients `s_0^D .. s_n^D` of `w -> D^2 J(z, w) - D J(Dz, w/D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DVariantCoeffs {
    pub d: u32,
    pub z: Complex64,
    pub tau: ModuliPoint,
    pub coeffs: Vec<Complex64>,
}

/// Contour for [`s_coeffs`]: the nearest singularities of the D-variant in
/// `w` are the nonzero lattice points, so half the shortest period (capped at
/// 0.5) keeps them outside.
pub fn default_s_cauchy(tau: &ModuliPoint) -> CauchyConfig {
    CauchyConfig {
        radius: (0.5 * tau.shortest_period()).min(0.5),
        samples: 64,
        self_check: true,
    }
}

fn check_d_variant_point(z: Complex64, tau: &ModuliPoint, d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidInput("D must be at least 1".into()));
    }
    tau.check_away_from_lattice(z, POLE_THRESHOLD)?;
    tau.check_away_from_lattice(d as f64 * z, POLE_THRESHOLD)
}

pub fn s_coeffs(
    z: Complex64,
    tau: &ModuliPoint,
    d: u32,
    n: usize,
    cfg: &CauchyConfig,
) -> Result<DVariantCoeffs> {
    if n > MAX_S_ORDER {
        return Err(Error::InvalidInput(format!(
            "Taylor order {n} exceeds the supported maximum {MAX_S_ORDER}"
        )));
    }
    check_d_variant_point(z, tau, d)?;
    if cfg.radius >= tau.shortest_period() {
        return Err(Error::InvalidInput(format!(
            "contour radius {} encloses a lattice pole of the D-variant",
            cfg.radius
        )));
    }
    let coeffs = if d == 1 {
        vec![Complex64::new(0.0, 0.0); n + 1]
    } else {
        let df = d as f64;
        let dz = df * z;
        cauchy_coeffs(
            |w| Ok(df * df * j_at(z, w, tau)? - df * j_at(dz, w / df, tau)?),
            n,
            cfg,
        )?
    };
    Ok(DVariantCoeffs {
        d,
        z,
        tau: *tau,
        coeffs,
    })
}

/// `d log theta_D / dz = D^2 theta'/theta(z) - D theta'/theta(Dz)`, the
/// constant Taylor coefficient of the D-variant.
pub fn dlog_kato_siegel(z: Complex64, tau: &ModuliPoint, d: u32) -> Result<Complex64> {
    if d < 2 {
        return Err(Error::InvalidInput("Kato-Siegel functions need D >= 2".into()));
    }
    check_d_variant_point(z, tau, d)?;
    let df = d as f64;
    let a = theta_log_derivatives(z, tau)?.first;
    let b = theta_log_derivatives(df * z, tau)?.first;
    Ok(df * df * a - df * b)
}

/// Weight of the `(c, d)` translate in the distribution relation,
/// `D exp(2 pi i c z)`. It is the inverse of [`quasi_period_factor`] for the
/// translate `w -> w + c tau + d`, scaled by `D`; shifting `c` by `D` is
/// compensated by the quasi-periodicity of `J(Dz, .)`.
pub fn distribution_cocycle(c: i64, d_rep: i64, d: u32, z: Complex64) -> Complex64 {
    let _ = d_rep;
    d as f64 * (TWO_PI_I * c as f64 * z).exp()
}

/// Left side of the distribution relation:
/// `sum_{(c,d) != 0 mod D} D exp(2 pi i c z) J(Dz, w + (c tau + d)/D)`.
pub fn distribution_lhs(p: &KroneckerPoint, d: u32) -> Result<Complex64> {
    let tau = p.tau;
    let df = d as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..d as i64 {
        for dd in 0..d as i64 {
            if (c, dd) == (0, 0) {
                continue;
            }
            let t = (c as f64 * tau.tau() + dd as f64) / df;
            acc += distribution_cocycle(c, dd, d, p.z) * j_at(df * p.z, p.w + t, &tau)?;
        }
    }
    Ok(acc)
}

/// Right side: `D^2 J(z, Dw) - D J(Dz, w)`.
pub fn distribution_rhs(p: &KroneckerPoint, d: u32) -> Result<Complex64> {
    let df = d as f64;
    Ok(df * df * j_at(p.z, df * p.w, &p.tau)? - df * j_at(df * p.z, p.w, &p.tau)?)
}

pub fn distribution_residual(p: &KroneckerPoint, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidInput("D must be at least 1".into()));
    }
    if d == 1 {
        return Ok(0.0);
    }
    let df = d as f64;
    let tau = p.tau;
    tau.check_away_from_lattice(p.z, POLE_THRESHOLD)?;
    tau.check_away_from_lattice(df * p.z, POLE_THRESHOLD)?;
    // w must stay away from every D-torsion point.
    if tau.lattice_distance(df * p.w) < df * 1e-6 {
        return Err(Error::PoleProximity {
            z: p.w,
            distance: tau.lattice_distance(df * p.w) / df,
        });
    }
    let lhs = distribution_lhs(p, d)?;
    let rhs = distribution_rhs(p, d)?;
    let scale = jacobi_j(p)?.norm().max(1.0);
    Ok((lhs - rhs).norm() / scale)
}

/// `max_{|w| = radius} |D^2 J(z, Dw) - D J(Dz, w)|` together with `|s_0^D(z)|`.
pub fn pole_removal_bound(
    z: Complex64,
    tau: &ModuliPoint,
    d: u32,
    radius: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    let s0 = dlog_kato_siegel(z, tau, d)?;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let w = Complex64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
        let v = distribution_rhs(&KroneckerPoint::new(z, w, *tau), d)?;
        worst = worst.max(v.norm());
    }
    Ok((worst, s0.norm()))
}

/// Contour integral of `dlog theta_D` around `center`.
pub fn kato_siegel_residue(
    center: Complex64,
    radius: f64,
    tau: &ModuliPoint,
    d: u32,
) -> Result<Complex64> {
    contour_integral(|z| dlog_kato_siegel(z, tau, d), center, radius, 512)
}

/// Independent evaluations used as oracles in tests and verification suites.
pub mod oracle {
    use super::*;

    /// `theta` from the Jacobi theta series
    /// `theta_1(z) = 2 sum_n (-1)^n q^{(n+1/2)^2} sin((2n+1) pi z)`, `q = e^{pi i tau}`,
    /// after reduction to the period parallelogram.
    pub fn theta_series(z: Complex64, tau: &ModuliPoint) -> Result<Complex64> {
        let (z0, c, d) = tau.reduce(z);
        let t = tau.tau();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for n in 0..200 {
            let half = n as f64 + 0.5;
            let qpow = (PI * I * t * half * half).exp();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let k = 2.0 * n as f64 + 1.0;
            num += sign * qpow * (k * PI * z0).sin();
            den += sign * qpow * k * PI;
            if qpow.norm() * (k * PI * z0.im.abs()).exp() < 1e-20 {
                break;
            }
        }
        let cf = c as f64;
        let sign = if (c + d).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let factor = (-PI * I * cf * cf * t - TWO_PI_I * cf * z0).exp();
        ensure_finite(sign * factor * num / den, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierstrass::{eta_periods, sigma, zeta_fn};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(re: f64, im: f64) -> ModuliPoint {
        ModuliPoint::new(c(re, im)).unwrap()
    }

    #[test]
    fn theta_odd_normalized() {
        let tau = mp(0.2, 1.1);
        let z = c(0.3, -0.2);
        let t = theta(z, &tau).unwrap();
        assert!((theta(-z, &tau).unwrap() + t).norm() < 1e-13 * t.norm());
        let small = c(1e-5, 0.0);
        assert!((theta(small, &tau).unwrap() / small - 1.0).norm() < 1e-8);
    }

    #[test]
    fn theta_translation_laws() {
        let tau = mp(0.2, 1.1);
        let z = c(0.3, -0.2);
        let t = theta(z, &tau).unwrap();
        assert!((theta(z + 1.0, &tau).unwrap() + t).norm() < 1e-9 * t.norm());
        let lhs = theta(z + tau.tau(), &tau).unwrap();
        let rhs = -(-PI * I * tau.tau() - TWO_PI_I * z).exp() * t;
        assert!((lhs - rhs).norm() < 1e-9 * rhs.norm());
    }

    #[test]
    fn theta_is_exp_minus_eta_sigma() {
        // theta = exp(z^2/2 * e) sigma with e = zeta(z) - zeta(z+1) = -eta1
        let tau = mp(-0.1, 0.9);
        let z = c(0.41, 0.2);
        let e = -eta_periods(&tau).unwrap().eta1;
        let want = (z * z / 2.0 * e).exp() * sigma(z, &tau).unwrap();
        assert!((theta(z, &tau).unwrap() - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn product_and_series_agree() {
        for (z, tau) in [
            (c(0.2, 0.0), mp(0.0, 1.0)),
            (c(0.3, 0.3), mp(0.0, 1.0)),
            (c(0.2 + 0.3, 0.0), mp(0.0, 1.0)),
            (c(-1.7, 2.2), mp(0.4, 0.8)),
        ] {
            let a = theta(z, &tau).unwrap();
            let b = oracle::theta_series(z, &tau).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm(), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn j_reference_value_two_routes() {
        let tau = mp(0.0, 1.0);
        let (z, w) = (c(0.2, 0.0), c(0.3, 0.0));
        let j = jacobi_j(&KroneckerPoint::new(z, w, tau)).unwrap();
        let s = |u| oracle::theta_series(u, &tau).unwrap();
        let alt = s(z + w) / (s(z) * s(w));
        assert!((j - alt).norm() < 1e-9 * j.norm());
    }

    #[test]
    fn j_symmetric_and_simple_pole() {
        let tau = mp(0.1, 1.3);
        let p = KroneckerPoint::new(c(0.2, 0.1), c(0.35, -0.05), tau);
        let a = jacobi_j(&p).unwrap();
        let b = jacobi_j(&p.swapped()).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        // J(z, w) = 1/w + theta'/theta(z) + O(w)
        let w = c(1e-5, 0.0);
        let j = jacobi_j(&KroneckerPoint::new(c(0.2, 0.1), w, tau)).unwrap();
        let d1 = theta_log_derivatives(c(0.2, 0.1), &tau).unwrap().first;
        assert!((j - 1.0 / w - d1).norm() < 1e-3 * d1.norm());
        assert!(matches!(
            jacobi_j(&KroneckerPoint::new(c(0.2, 0.1), c(1.0, 0.0), tau)),
            Err(Error::PoleProximity { .. })
        ));
        // z + w on the lattice is a zero, not an error
        let zero = jacobi_j(&KroneckerPoint::new(c(0.2, 0.1), c(0.8, -0.1), tau)).unwrap();
        assert!(zero.norm() < 1e-10);
    }

    #[test]
    fn quasi_period_factor_laws() {
        let tau = mp(0.1, 1.2);
        let w = c(0.31, 0.07);
        let p = KroneckerPoint::new(c(0.2, 0.1), w, tau);
        assert_eq!(quasi_period_factor(0, 0, &p).unwrap(), c(1.0, 0.0));
        for (cc, d) in [(0, 1), (1, 0), (2, -1), (-1, 3)] {
            let chi = quasi_period_factor(cc, d, &p).unwrap();
            for z in [c(0.2, 0.1), c(-0.15, 0.3), c(0.33, -0.2)] {
                let shift = cc as f64 * tau.tau() + d as f64;
                let lhs = jacobi_j(&KroneckerPoint::new(z + shift, w, tau)).unwrap();
                let rhs = chi * jacobi_j(&KroneckerPoint::new(z, w, tau)).unwrap();
                assert!((lhs - rhs).norm() < 1e-9 * rhs.norm(), "({cc},{d}) at {z}");
            }
            let back = quasi_period_factor(-cc, -d, &p).unwrap();
            assert!((chi * back - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn heat_equation_example() {
        let cfg = DiffConfig::default();
        let p = KroneckerPoint::new(c(0.2, 0.0), c(0.3, 0.0), mp(0.1, 1.3));
        let r = heat_residual(&p, &cfg).unwrap();
        assert!(r < 1e-6, "{r:e}");
        let r2 = heat_residual(&p.swapped(), &cfg).unwrap();
        assert!((r - r2).abs() < 1e-8);
        let near = KroneckerPoint::new(c(0.2, 0.0), c(5e-4, 0.0), mp(0.1, 1.3));
        assert!(matches!(heat_residual(&near, &cfg), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn mixed_derivative_matches_nested_differences() {
        let cfg = DiffConfig::new(1e-3, 2).unwrap();
        for (z, w, tau) in [
            (c(0.2, 0.1), c(0.3, 0.05), mp(0.1, 1.3)),
            (c(0.11, 0.08), c(0.12, 0.07), mp(-0.3, 1.04)),
            (c(0.7, 0.9), c(-0.4, 0.6), mp(0.45, 0.85)),
        ] {
            let p = KroneckerPoint::new(z, w, tau);
            let fd = finite_diff(|a| finite_diff(|b| j_at(a, b, &tau), w, &cfg), z, &cfg).unwrap();
            let exact = mixed_derivative(&p).unwrap();
            // nested differences carry about 1e-7 of rounding here
            assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn s0_is_zeta_combination() {
        let tau = mp(0.15, 1.2);
        let z = c(0.23, 0.11);
        for d in [2u32, 3] {
            let s = s_coeffs(z, &tau, d, 4, &default_s_cauchy(&tau)).unwrap();
            let df = d as f64;
            let want = df * df * zeta_fn(z, &tau).unwrap() - df * zeta_fn(df * z, &tau).unwrap();
            assert!((s.coeffs[0] - want).norm() < 1e-8 * want.norm(), "D={d}");
            let dl = dlog_kato_siegel(z, &tau, d).unwrap();
            assert!((dl - want).norm() < 1e-10 * want.norm());
        }
    }

    #[test]
    fn s_coeffs_trivial_for_d1() {
        let tau = mp(0.0, 1.1);
        let s = s_coeffs(c(0.2, 0.1), &tau, 1, 5, &default_s_cauchy(&tau)).unwrap();
        assert!(s.coeffs.iter().all(|v| v.norm() < 1e-11));
    }

    #[test]
    fn s_coeffs_scaling_identity() {
        let tau = mp(0.0, 1.2);
        let z = c(0.23, 0.05);
        let d = 2u32;
        let df = d as f64;
        let cfg = default_s_cauchy(&tau);
        let s = s_coeffs(z, &tau, d, 6, &cfg).unwrap();
        let scaled = cauchy_coeffs(
            |w| Ok(df * df * j_at(z, df * w, &tau)? - df * j_at(df * z, w, &tau)?),
            6,
            &CauchyConfig {
                radius: cfg.radius / df,
                ..cfg
            },
        )
        .unwrap();
        for (k, (got, sk)) in scaled.iter().zip(&s.coeffs).enumerate() {
            let want = df.powi(k as i32) * sk;
            assert!((got - want).norm() < 1e-9 * want.norm().max(1e-3), "k={k}");
        }
    }

    #[test]
    fn s_coeffs_sample_doubling() {
        let tau = mp(-0.2, 1.0);
        let z = c(0.31, 0.17);
        let cfg = default_s_cauchy(&tau);
        let a = s_coeffs(z, &tau, 3, 8, &cfg).unwrap();
        let b = s_coeffs(z, &tau, 3, 8, &CauchyConfig { samples: 128, ..cfg }).unwrap();
        for k in 0..=8 {
            let scale = a.coeffs[k].norm().max(1e-6);
            assert!((a.coeffs[k] - b.coeffs[k]).norm() < 1e-9 * scale, "k={k}");
        }
    }

    #[test]
    fn s_coeffs_rejects_oversized_contour() {
        let tau = mp(0.0, 1.0);
        let cfg = CauchyConfig::new(1.2, 64).unwrap();
        assert!(s_coeffs(c(0.2, 0.1), &tau, 2, 3, &cfg).is_err());
        assert!(s_coeffs(c(0.2, 0.1), &tau, 2, MAX_S_ORDER + 1, &default_s_cauchy(&tau)).is_err());
    }

    #[test]
    fn kato_siegel_divisor() {
        let tau = mp(0.1, 1.2);
        for d in [2u32, 3] {
            let df = d as f64;
            let at_origin = kato_siegel_residue(c(0.0, 0.0), 0.05 / df, &tau, d).unwrap();
            let want = TWO_PI_I * (df * df - 1.0);
            assert!((at_origin - want).norm() < 1e-7 * want.norm());
            let t = (tau.tau() + 1.0) / df;
            let at_torsion = kato_siegel_residue(t, 0.05 / df, &tau, d).unwrap();
            assert!((at_torsion + TWO_PI_I).norm() < 1e-7 * TWO_PI_I.norm());
        }
    }

    #[test]
    fn kato_siegel_norm_compatibility() {
        let tau = mp(0.05, 1.1);
        let z = c(0.27, 0.12);
        for (m, d) in [(2i64, 3u32), (3, 2)] {
            let mf = m as f64;
            let mut acc = c(0.0, 0.0);
            for cc in 0..m {
                for dd in 0..m {
                    let u = (z + cc as f64 * tau.tau() + dd as f64) / mf;
                    acc += dlog_kato_siegel(u, &tau, d).unwrap();
                }
            }
            let want = dlog_kato_siegel(z, &tau, d).unwrap();
            assert!((acc / mf - want).norm() < 1e-7 * want.norm(), "M={m} D={d}");
        }
    }

    #[test]
    fn distribution_relation_holds() {
        let tau = mp(0.0, 1.2);
        let p = KroneckerPoint::new(c(0.23, 0.0), c(0.31, 0.0), tau);
        assert!(distribution_residual(&p, 2).unwrap() < 1e-6);
        assert!(distribution_residual(&p, 3).unwrap() < 1e-6);
        assert_eq!(distribution_residual(&p, 1).unwrap(), 0.0);
        let shifted = KroneckerPoint::new(p.z + 1.0, p.w, tau);
        let a = distribution_residual(&p, 2).unwrap();
        let b = distribution_residual(&shifted, 2).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn distribution_cocycle_is_well_defined_mod_d() {
        let tau = mp(0.1, 1.1);
        let (z, w, d) = (c(0.21, 0.07), c(0.13, 0.19), 3u32);
        let df = d as f64;
        for (cc, dd) in [(1i64, 2i64), (2, 0)] {
            let term = |c0: i64, d0: i64| {
                let t = (c0 as f64 * tau.tau() + d0 as f64) / df;
                distribution_cocycle(c0, d0, d, z) * j_at(df * z, w + t, &tau).unwrap()
            };
            let base = term(cc, dd);
            let lifted = term(cc + d as i64, dd - d as i64);
            assert!((base - lifted).norm() < 1e-9 * base.norm());
        }
    }

    #[test]
    fn distribution_rejects_torsion_w() {
        let tau = mp(0.0, 1.2);
        let p = KroneckerPoint::new(c(0.23, 0.0), c(0.5, 0.0), tau);
        assert!(matches!(distribution_residual(&p, 2), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn pole_removed_for_d_variant() {
        let tau = mp(0.0, 1.2);
        for d in [2u32, 3] {
            let (worst, s0) = pole_removal_bound(c(0.23, 0.11), &tau, d, 1e-3, 64).unwrap();
            assert!(worst <= 10.0 * s0, "D={d}: {worst} vs {s0}");
        }
    }
}
