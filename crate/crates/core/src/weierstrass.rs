//! Weierstrass functions for the lattice `Z + tau Z`.
//!
//! Everything is expressed through the normalized odd theta function
//! `theta(z) = theta_1(z|tau) / theta_1'(0|tau)` evaluated by its q-product
//! (see [`crate::kronecker::theta`]):
//!
//! ```text
//! sigma(z) = exp(eta1 z^2 / 2) theta(z)
//! zeta(z)  = theta'(z)/theta(z) + eta1 z
//! wp(z)    = -zeta'(z)
//! ```
//!
//! `eta1` is the classical quasi-period `zeta(z + 1) - zeta(z)` (so
//! `eta1(i) = pi`) and `eta2 = eta1 tau - 2 pi i` is its companion in the
//! `tau` direction. The connection formulas of [`crate::logsheaf`] use the
//! opposite sign, see [`connection_eta`].

use std::f64::consts::PI;

use num_complex::Complex64;
use crate::error::{Error, Result};
use crate::kronecker;
use crate::numerics::{DiffConfig, TWO_PI_I};

/// Reject evaluation this close to a pole.
pub const POLE_THRESHOLD: f64 = 1e-8;

/// Upper bound on the number of q-series / q-product terms.
pub(crate) const MAX_Q_TERMS: usize = 20_000;

/// A point of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuliPoint {
    tau: Complex64,
}

impl ModuliPoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !tau.im.is_finite() || tau.im <= 0.0 || !tau.re.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau must lie in the upper half plane, got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// `q = exp(2 pi i tau)`.
    pub fn nome(&self) -> Complex64 {
        (TWO_PI_I * self.tau).exp()
    }

    /// Shifts `tau` by `h`; used for finite differences in the moduli direction.
    pub fn shifted(&self, h: Complex64) -> Result<Self> {
        Self::new(self.tau + h)
    }

    /// Splits `z = z0 + c tau + d` with `z0` in the centered period parallelogram.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let c = (z.im / self.tau.im).round();
        let z1 = z - c * self.tau;
        let d = z1.re.round();
        (z1 - d, c as i64, d as i64)
    }

    /// Euclidean distance from `z` to the lattice `Z + tau Z`.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let (z0, _, _) = self.reduce(z);
        let mut best = f64::INFINITY;
        for c in -1..=1 {
            for d in -2..=2 {
                let p = c as f64 * self.tau + d as f64;
                best = best.min((z0 - p).norm());
            }
        }
        best
    }

    /// Length of the shortest nonzero lattice vector.
    pub fn shortest_period(&self) -> f64 {
        let mut best = f64::INFINITY;
        for c in -3i64..=3 {
            for d in -3i64..=3 {
                if (c, d) != (0, 0) {
                    best = best.min((c as f64 * self.tau + d as f64).norm());
                }
            }
        }
        best
    }

    pub(crate) fn check_away_from_lattice(&self, z: Complex64, threshold: f64) -> Result<()> {
        let distance = self.lattice_distance(z);
        if distance < threshold {
            return Err(Error::PoleProximity { z, distance });
        }
        Ok(())
    }

    /// Number of q-power terms needed so that `|q|^n exp(pi Im tau) < 1e-17`.
    pub(crate) fn q_terms(&self) -> Result<usize> {
        let decay = 2.0 * PI * self.tau.im;
        let n = (17.0 * std::f64::consts::LN_10 / decay + 1.5).ceil() as usize + 1;
        if n > MAX_Q_TERMS {
            return Err(Error::Convergence(format!(
                "Im tau = {} needs {n} q-series terms (limit {MAX_Q_TERMS})",
                self.tau.im
            )));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPeriods {
    pub eta1: Complex64,
    pub eta2: Complex64,
}

/// `sum_{n >= 1} n^p q^n / (1 - q^n)`.
fn lambert(q: Complex64, power: i32, terms: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..=terms {
        qn *= q;
        let t = (n as f64).powi(power) * qn / (1.0 - qn);
        acc += t;
        if t.norm() < 1e-19 * acc.norm().max(1.0) {
            break;
        }
    }
    acc
}

/// Quasi-periods from the weight-2 Eisenstein series:
/// `eta1 = G2(tau) = (pi^2 / 3) (1 - 24 sum sigma_1(n) q^n)`.
pub fn eta_periods(tau: &ModuliPoint) -> Result<QuasiPeriods> {
    let terms = tau.q_terms()?;
    let q = tau.nome();
    let eta1 = PI * PI / 3.0 * (1.0 - 24.0 * lambert(q, 1, terms));
    let eta2 = eta1 * tau.tau() - TWO_PI_I;
    Ok(QuasiPeriods { eta1, eta2 })
}

/// The quasi-period coefficient entering the connection formulas and the
/// exponent of the theta kernel: `zeta(z) - zeta(z + 1) = -eta1`.
pub fn connection_eta(tau: &ModuliPoint) -> Result<Complex64> {
    Ok(-eta_periods(tau)?.eta1)
}

/// `d/dtau` of [`connection_eta`] by central differences.
pub fn connection_eta_derivative(tau: &ModuliPoint, cfg: &DiffConfig) -> Result<Complex64> {
    crate::numerics::finite_diff(
        |t| connection_eta(&ModuliPoint::new(t)?),
        tau.tau(),
        cfg,
    )
}

/// Step used for `d eta / d tau` inside connection matrices.
pub fn eta_derivative_config() -> DiffConfig {
    DiffConfig {
        step: 1e-5,
        richardson_levels: 2,
    }
}

pub fn sigma(z: Complex64, tau: &ModuliPoint) -> Result<Complex64> {
    let eta = eta_periods(tau)?.eta1;
    Ok((eta * z * z / 2.0).exp() * kronecker::theta(z, tau)?)
}

pub fn zeta_fn(z: Complex64, tau: &ModuliPoint) -> Result<Complex64> {
    tau.check_away_from_lattice(z, POLE_THRESHOLD)?;
    let eta = eta_periods(tau)?.eta1;
    let derivs = kronecker::theta_log_derivatives(z, tau)?;
    Ok(derivs.first + eta * z)
}

/// `(wp(z), wp'(z))`.
pub fn wp(z: Complex64, tau: &ModuliPoint) -> Result<(Complex64, Complex64)> {
    tau.check_away_from_lattice(z, POLE_THRESHOLD)?;
    let eta = eta_periods(tau)?.eta1;
    let derivs = kronecker::theta_log_derivatives(z, tau)?;
    Ok((-(derivs.second + eta), -derivs.third))
}

/// `(g2, g3) = (60 G4, 140 G6)` from the q-expansions of `E4` and `E6`.
pub fn g_invariants(tau: &ModuliPoint) -> Result<(Complex64, Complex64)> {
    let terms = tau.q_terms()?;
    let q = tau.nome();
    let e4 = 1.0 + 240.0 * lambert(q, 3, terms);
    let e6 = 1.0 - 504.0 * lambert(q, 5, terms);
    let pi4 = PI.powi(4);
    Ok((4.0 * pi4 / 3.0 * e4, 8.0 * pi4 * PI * PI / 27.0 * e6))
}

/// Brute-force lattice sums, kept independent of the q-series above.
pub mod oracle {
    use super::*;
    use crate::eisenstein::tail;
    use crate::numerics::{lattice_sum, lattice_sum_rows, Accumulator, LatticeTruncation};

    /// `G_k = sum' (m tau + n)^{-k}` for `k >= 3`, summed per `trunc`.
    pub fn eisenstein_g(k: u32, tau: &ModuliPoint, trunc: &LatticeTruncation) -> Complex64 {
        let t = tau.tau();
        lattice_sum(trunc, |m, n| (m as f64 * t + n as f64).powi(-(k as i32)))
    }

    /// `(g2, g3)` from `60 G4` and `140 G6` lattice sums.
    pub fn g_invariants_lattice(tau: &ModuliPoint, trunc: &LatticeTruncation) -> (Complex64, Complex64) {
        (
            60.0 * eisenstein_g(4, tau, trunc),
            140.0 * eisenstein_g(6, tau, trunc),
        )
    }

    /// `G2` under Eisenstein summation: each row `sum_n (m tau + n)^{-2}` is
    /// completed to infinity with an Euler-Maclaurin tail before summing rows.
    pub fn eta1_lattice(tau: &ModuliPoint, trunc: &LatticeTruncation) -> Result<Complex64> {
        if trunc.ordering != crate::numerics::LatticeOrdering::Eisenstein {
            return Err(Error::ModeMismatch(
                "G2 is conditionally convergent; Eisenstein ordering required".into(),
            ));
        }
        let t = tau.tau();
        let radius = trunc.shell_radius as i64;
        Ok(lattice_sum_rows(trunc, |m, cols| {
            let x = m as f64 * t;
            let mut acc = Accumulator::new(trunc.compensated_summation);
            for &n in cols {
                acc.add((x + n as f64).powi(-2));
            }
            acc.add(tail::row_tail(x, 0.0, 2, radius));
            acc.value()
        }))
    }

    /// Weierstrass zeta from the Eisenstein-summed series
    /// `zeta(z) = 1/z + sum' [1/(z - w) + 1/w + z/w^2]`.
    pub fn zeta_lattice(z: Complex64, tau: &ModuliPoint, trunc: &LatticeTruncation) -> Complex64 {
        let t = tau.tau();
        1.0 / z
            + lattice_sum(trunc, |m, n| {
                let w = m as f64 * t + n as f64;
                1.0 / (z - w) + 1.0 / w + z / (w * w)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff, LatticeTruncation};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(re: f64, im: f64) -> ModuliPoint {
        ModuliPoint::new(c(re, im)).unwrap()
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(ModuliPoint::new(c(0.0, -1.0)).is_err());
        assert!(ModuliPoint::new(c(0.3, 0.0)).is_err());
    }

    #[test]
    fn eta1_at_i_is_pi() {
        let e = eta_periods(&mp(0.0, 1.0)).unwrap();
        assert!((e.eta1 - c(PI, 0.0)).norm() < 1e-12, "{}", e.eta1);
    }

    #[test]
    fn eta1_translation_invariant_and_legendre() {
        let a = eta_periods(&mp(0.3, 1.2)).unwrap();
        let b = eta_periods(&mp(1.3, 1.2)).unwrap();
        assert!((a.eta1 - b.eta1).norm() < 1e-10);
        let t = c(0.3, 1.2);
        assert!((a.eta1 * t - a.eta2 - TWO_PI_I).norm() < 1e-10);
    }

    #[test]
    fn sigma_odd_normalized_quasi_periodic() {
        let tau = mp(0.0, 1.1);
        let z = c(0.17, 0.23);
        let s = sigma(z, &tau).unwrap();
        assert!((sigma(-z, &tau).unwrap() + s).norm() < 1e-12 * s.norm());
        let small = c(1e-5, 0.0);
        assert!((sigma(small, &tau).unwrap() / small - 1.0).norm() < 1e-8);

        let eta = eta_periods(&tau).unwrap().eta1;
        let lhs = sigma(z + 1.0, &tau).unwrap();
        let rhs = -s * (eta * (z + 0.5)).exp();
        assert!((lhs - rhs).norm() < 1e-9 * rhs.norm());
        let t = tau.tau();
        let eta2 = eta_periods(&tau).unwrap().eta2;
        let lhs = sigma(z + t, &tau).unwrap();
        let rhs = -s * (eta2 * (z + t / 2.0)).exp();
        assert!((lhs - rhs).norm() < 1e-9 * rhs.norm());
    }

    #[test]
    fn zeta_examples() {
        let tau = mp(0.1, 1.1);
        let z = c(0.21, 0.13);
        let zz = zeta_fn(z, &tau).unwrap();
        assert!((zeta_fn(-z, &tau).unwrap() + zz).norm() < 1e-10 * zz.norm());
        let small = c(1e-4, 0.0);
        assert!((small * zeta_fn(small, &tau).unwrap() - 1.0).norm() < 1e-6);
        let eta = eta_periods(&tau).unwrap().eta1;
        assert!((zeta_fn(z + 1.0, &tau).unwrap() - zz - eta).norm() < 1e-9);
        assert!(matches!(
            zeta_fn(c(1.0, 1e-10), &tau),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn zeta_matches_lattice_series() {
        let tau = mp(0.0, 1.3);
        let z = c(0.21, 0.13);
        let direct = zeta_fn(z, &tau).unwrap();
        // Eisenstein-ordered box; the tail of the summand is O(|w|^-3).
        let oracle = oracle::zeta_lattice(z, &tau, &LatticeTruncation::eisenstein(1000));
        assert!((direct - oracle).norm() < 1e-4, "{direct} vs {oracle}");
    }

    #[test]
    fn wp_even_ode_and_pole() {
        let tau = mp(0.1, 1.1);
        let z = c(0.21, 0.13);
        let (p, dp) = wp(z, &tau).unwrap();
        let (pm, dpm) = wp(-z, &tau).unwrap();
        assert!((p - pm).norm() < 1e-10 * p.norm());
        assert!((dp + dpm).norm() < 1e-10 * dp.norm());
        let (g2, g3) = g_invariants(&tau).unwrap();
        let res = dp * dp - (4.0 * p * p * p - g2 * p - g3);
        assert!(res.norm() < 1e-7 * (dp * dp).norm(), "{res}");
        let small = c(1e-3, 0.0);
        let (ps, _) = wp(small, &tau).unwrap();
        assert!((small * small * ps - 1.0).norm() < 1e-4);
    }

    #[test]
    fn zeta_prime_is_minus_wp() {
        let tau = mp(-0.2, 0.9);
        let z = c(0.3, 0.1);
        let d = finite_diff(|u| zeta_fn(u, &tau), z, &DiffConfig::default()).unwrap();
        let (p, _) = wp(z, &tau).unwrap();
        assert!((d + p).norm() < 1e-6 * p.norm().max(1.0));
    }

    #[test]
    fn square_and_hexagonal_symmetry() {
        let (_, g3) = g_invariants(&mp(0.0, 1.0)).unwrap();
        assert!(g3.norm() < 1e-10);
        let rho = Complex64::from_polar(1.0, PI / 3.0);
        let (g2, _) = g_invariants(&ModuliPoint::new(rho).unwrap()).unwrap();
        assert!(g2.norm() < 1e-9);
        let (g2, g3) = g_invariants(&mp(0.31, 1.27)).unwrap();
        assert!((g2 * g2 * g2 - 27.0 * g3 * g3).norm() > 1.0);
    }

    #[test]
    fn square_and_hexagonal_symmetry_lattice_oracle() {
        let trunc = LatticeTruncation::eisenstein(300);
        let (_, g3) = oracle::g_invariants_lattice(&mp(0.0, 1.0), &trunc);
        assert!(g3.norm() < 1e-8);
        let rho = Complex64::from_polar(1.0, PI / 3.0);
        let (g2, _) = oracle::g_invariants_lattice(&ModuliPoint::new(rho).unwrap(), &trunc);
        assert!(g2.norm() < 1e-3);
    }

    #[test]
    fn eta1_lattice_oracle_at_i() {
        let tau = mp(0.0, 1.0);
        let v = oracle::eta1_lattice(&tau, &LatticeTruncation::eisenstein(200)).unwrap();
        assert!((v - c(PI, 0.0)).norm() < 1e-8, "{v}");
    }

    #[test]
    fn reduce_round_trips() {
        let tau = mp(0.4, 0.9);
        let z = c(3.7, -2.6);
        let (z0, cc, d) = tau.reduce(z);
        assert!((z0 + cc as f64 * tau.tau() + d as f64 - z).norm() < 1e-12);
        assert!(z0.im.abs() <= 0.45 + 1e-12);
        assert!(tau.lattice_distance(c(1.4, 0.9)) < 1e-12);
    }
}
