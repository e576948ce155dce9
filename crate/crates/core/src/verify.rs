//! Seeded verification suites and their JSON reports.
//!
//! Every check draws its evaluation points from a ChaCha8 stream seeded by
//! the run seed and the check name, evaluates them in parallel and reduces
//! the residuals in point order. Reports are therefore byte-identical for a
//! fixed seed and configuration regardless of the thread count, as long as
//! timings are not requested.
//!
//! Sampling boxes: `Re z in [0.1, 0.4]`, `Im z in [0.05, 0.3]`,
//! `Re tau in [-0.5, 0.5]`, `Im tau in [0.8, 2.0]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value};

use crate::eisenstein::{
    eisenstein_f, eisenstein_f_tilde, eisenstein_sum_k2, EisensteinQuery, SumMode,
};
use crate::error::{Error, Result};
use crate::kronecker::{
    default_s_cauchy, distribution_residual, dlog_kato_siegel, heat_residual,
    kato_siegel_residue, pole_removal_bound, s_coeffs, KroneckerPoint,
};
use crate::logsheaf::{curvature_residual, gauss_manin_matrix};
use crate::numerics::{
    cauchy_coeffs, finite_diff, finite_diff_vec, CauchyConfig, DiffConfig, LatticeTruncation,
    TWO_PI_I,
};
use crate::polylog::{closedness_residual_with, l_form, specialize_eisenstein, TorsionLabel};
use crate::weierstrass::{eta_periods, g_invariants, oracle, wp, zeta_fn, ModuliPoint};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Weierstrass,
    Heat,
    Curvature,
    Closedness,
    Distribution,
    Katosiegel,
    Eisenstein,
    Specialization,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Weierstrass,
        Suite::Heat,
        Suite::Curvature,
        Suite::Closedness,
        Suite::Distribution,
        Suite::Katosiegel,
        Suite::Eisenstein,
        Suite::Specialization,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Weierstrass => "weierstrass",
            Suite::Heat => "heat",
            Suite::Curvature => "curvature",
            Suite::Closedness => "closedness",
            Suite::Distribution => "distribution",
            Suite::Katosiegel => "katosiegel",
            Suite::Eisenstein => "eisenstein",
            Suite::Specialization => "specialization",
        }
    }

    /// Check names produced by this suite.
    pub fn checks(&self) -> Vec<&'static str> {
        match self {
            Suite::All => Suite::ALL.iter().flat_map(|s| s.checks()).collect(),
            Suite::Weierstrass => vec!["legendre", "eta1_at_i", "wp_ode"],
            Suite::Heat => vec!["heat_equation", "taylor_heat"],
            Suite::Curvature => vec!["curvature", "gauss_manin_periods"],
            Suite::Closedness => vec!["closedness"],
            Suite::Distribution => vec!["distribution_relation", "pole_removal", "s_coeffs_scaling"],
            Suite::Katosiegel => vec!["residue_origin", "residue_torsion", "norm_trace", "l0_dlog"],
            Suite::Eisenstein => vec!["naive_vs_lipschitz", "parity", "weight2_consistency", "translation"],
            Suite::Specialization => vec!["specialization"],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        std::iter::once(Suite::All)
            .chain(Suite::ALL)
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerance_overrides: BTreeMap<String, f64>,
    /// Truncation for naive lattice sums.
    pub truncation: LatticeTruncation,
    pub diff: DiffConfig,
    /// Contour for Taylor coefficients; `None` picks a radius per `tau`.
    pub cauchy: Option<CauchyConfig>,
    pub parallelism: usize,
    /// Adds `runtime_ms` to each check record (makes reports non-reproducible).
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance_overrides: BTreeMap::new(),
            truncation: LatticeTruncation::eisenstein(2000),
            diff: DiffConfig::default(),
            cauchy: None,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        let known = Suite::All.checks();
        for (name, tol) in &self.tolerance_overrides {
            if !known.contains(&name.as_str()) {
                return Err(Error::Config(format!("tolerance override for unknown check {name:?}")));
            }
            if !(*tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("tolerance for {name} must be positive, got {tol}")));
            }
        }
        self.truncation.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.diff.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(c) = &self.cauchy {
            c.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Parses a JSON object or `key = value` lines. Dotted keys address
    /// nested fields (`truncation.shell_radius = 500`); `tolerance.NAME`
    /// sets an override. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str::<Value>(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?
        } else {
            key_value_to_json(text)?
        };
        let mut base = serde_json::to_value(RunConfig::default()).expect("default config serializes");
        merge(&mut base, value);
        let cfg: RunConfig =
            serde_json::from_value(base).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerance_overrides.get(name).copied().unwrap_or(default)
    }
}

fn key_value_to_json(text: &str) -> Result<Value> {
    let mut root = Value::Object(Map::new());
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let val = val.trim();
        let parsed = serde_json::from_str::<Value>(val).unwrap_or_else(|_| Value::String(val.to_string()));
        let mut path: Vec<&str> = key.split('.').collect();
        if path[0] == "tolerance" {
            path[0] = "tolerance_overrides";
        }
        let mut node = &mut root;
        for part in &path[..path.len() - 1] {
            node = node
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("line {}: {key} conflicts with a scalar", lineno + 1)))?
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
        }
        node.as_object_mut()
            .ok_or_else(|| Error::Config(format!("line {}: {key} conflicts with a scalar", lineno + 1)))?
            .insert(path[path.len() - 1].to_string(), parsed);
    }
    Ok(root)
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    /// The identity or property the check exercises.
    pub anchor: String,
    pub points_tested: usize,
    /// `None` when no point evaluated successfully.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
    pub runtime_ms: Option<u64>,
    /// Per-point detail, in point order; empty for most checks.
    pub rows: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

/// A JSON number with 17 significant digits; non-finite values become `null`.
pub fn json_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(Number::from_str(&text).expect("formatted float is a valid JSON number"))
}

pub fn json_complex(c: Complex64) -> Value {
    json!({ "re": json_number(c.re), "im": json_number(c.im) })
}

impl CheckRecord {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), json!(self.name));
        m.insert("anchor".into(), json!(self.anchor));
        m.insert("points_tested".into(), json!(self.points_tested));
        m.insert(
            "max_residual".into(),
            self.max_residual.map_or(Value::Null, json_number),
        );
        m.insert("tolerance".into(), json_number(self.tolerance));
        m.insert("pass".into(), json!(self.pass));
        if let Some(e) = &self.error {
            m.insert("error".into(), json!(e));
        }
        if let Some(ms) = self.runtime_ms {
            m.insert("runtime_ms".into(), json!(ms));
        }
        if !self.rows.is_empty() {
            m.insert("rows".into(), Value::Array(self.rows.clone()));
        }
        Value::Object(m)
    }
}

impl VerificationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "suite": self.suite.name(),
            "seed": self.seed,
            "pass": self.pass,
            "checks": self.checks.iter().map(CheckRecord::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs `suite` on a dedicated pool with `config.parallelism` threads.
pub fn run_suite(suite: Suite, config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::ALL.to_vec(),
        s => vec![s],
    };
    let checks = pool.install(|| {
        let runner = Runner { cfg: config };
        suites.iter().flat_map(|s| runner.suite(*s)).collect::<Vec<_>>()
    });
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        suite,
        seed: config.seed,
        checks,
        pass,
    })
}

/// 64-bit FNV-1a, used to derive per-check seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Sampler(ChaCha8Rng);

impl Sampler {
    fn new(seed: u64, check: &str) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed ^ fnv1a(check)))
    }

    fn tau(&mut self) -> ModuliPoint {
        let re = self.0.random_range(-0.5..=0.5);
        let im = self.0.random_range(0.8..=2.0);
        ModuliPoint::new(Complex64::new(re, im)).expect("sampled tau lies in the upper half plane")
    }

    fn z(&mut self) -> Complex64 {
        Complex64::new(self.0.random_range(0.1..=0.4), self.0.random_range(0.05..=0.3))
    }

    /// A `z` from the box at least `margin` away from the D-torsion points.
    fn z_off_torsion(&mut self, tau: &ModuliPoint, d: u32, margin: f64) -> Complex64 {
        loop {
            let z = self.z();
            if tau.lattice_distance(d as f64 * z) / d as f64 >= margin {
                return z;
            }
        }
    }

    /// A label with `(a, b)` and `(Da, Db)` both nonzero mod `level`; such a
    /// label exists iff `level` does not divide `D`.
    fn label(&mut self, level: i64, d: u32) -> (i64, i64) {
        self.label_where(level, d, |_, _| true)
    }

    /// As [`Sampler::label`], additionally skipping 2-torsion labels, where
    /// odd-weight series vanish identically by parity.
    fn label_off_two_torsion(&mut self, level: i64, d: u32) -> (i64, i64) {
        assert!(level > 2, "level {level} has only 2-torsion labels");
        self.label_where(level, d, |a, b| ((2 * a) % level, (2 * b) % level) != (0, 0))
    }

    fn label_where(&mut self, level: i64, d: u32, accept: impl Fn(i64, i64) -> bool) -> (i64, i64) {
        assert!(d as i64 % level != 0, "every label of level {level} is killed by {d}");
        loop {
            let a = self.0.random_range(0..level);
            let b = self.0.random_range(0..level);
            let di = d as i64;
            if (a, b) != (0, 0) && ((di * a) % level, (di * b) % level) != (0, 0) && accept(a, b) {
                return (a, b);
            }
        }
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
}

impl Runner<'_> {
    fn suite(&self, suite: Suite) -> Vec<CheckRecord> {
        match suite {
            Suite::All => Suite::ALL.iter().flat_map(|s| self.suite(*s)).collect(),
            Suite::Weierstrass => vec![self.legendre(), self.eta1_at_i(), self.wp_ode()],
            Suite::Heat => vec![self.heat_equation(), self.taylor_heat()],
            Suite::Curvature => vec![self.curvature(), self.gauss_manin_periods()],
            Suite::Closedness => vec![self.closedness()],
            Suite::Distribution => vec![
                self.distribution_relation(),
                self.pole_removal(),
                self.s_coeffs_scaling(),
            ],
            Suite::Katosiegel => vec![
                self.residue_origin(),
                self.residue_torsion(),
                self.norm_trace(),
                self.l0_dlog(),
            ],
            Suite::Eisenstein => vec![
                self.naive_vs_lipschitz(),
                self.parity(),
                self.weight2_consistency(),
                self.translation(),
            ],
            Suite::Specialization => vec![self.specialization()],
        }
    }

    fn cauchy(&self, tau: &ModuliPoint) -> CauchyConfig {
        self.cfg.cauchy.unwrap_or_else(|| default_s_cauchy(tau))
    }

    /// Evaluates `eval` on every point in parallel and folds the residuals
    /// in point order.
    fn run<P, F>(&self, name: &str, anchor: &str, tolerance: f64, points: Vec<P>, eval: F) -> CheckRecord
    where
        P: Sync,
        F: Fn(&P) -> Result<f64> + Sync,
    {
        self.run_with_rows(name, anchor, tolerance, points, |p| Ok((eval(p)?, None)))
    }

    /// [`Runner::run`] where each point may also contribute a report row.
    fn run_with_rows<P, F>(&self, name: &str, anchor: &str, tolerance: f64, points: Vec<P>, eval: F) -> CheckRecord
    where
        P: Sync,
        F: Fn(&P) -> Result<(f64, Option<Value>)> + Sync,
    {
        let start = Instant::now();
        let results: Vec<Result<(f64, Option<Value>)>> = points.par_iter().map(&eval).collect();
        let tolerance = self.cfg.tolerance(name, tolerance);
        let mut max_residual: Option<f64> = None;
        let mut error = None;
        let mut rows = Vec::new();
        for r in results.iter() {
            match r {
                Ok((v, row)) => {
                    let v = if v.is_nan() { f64::INFINITY } else { *v };
                    max_residual = Some(max_residual.map_or(v, |m| m.max(v)));
                    rows.extend(row.clone());
                }
                Err(e) if error.is_none() => error = Some(e.to_string()),
                Err(_) => {}
            }
        }
        let pass = error.is_none()
            && max_residual.is_some_and(|m| m.is_finite() && m <= tolerance);
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            points_tested: results.len(),
            max_residual,
            tolerance,
            pass,
            error,
            runtime_ms: self.cfg.timings.then(|| start.elapsed().as_millis() as u64),
            rows,
        }
    }

    fn sampler(&self, check: &str) -> Sampler {
        Sampler::new(self.cfg.seed, check)
    }

    fn legendre(&self) -> CheckRecord {
        let mut s = self.sampler("legendre");
        let points: Vec<(ModuliPoint, Complex64)> = (0..20).map(|_| (s.tau(), s.z())).collect();
        self.run(
            "legendre",
            "Legendre relation eta1 tau - eta2 = 2 pi i, with eta1, eta2 measured as zeta increments",
            1e-8,
            points,
            |(tau, z)| {
                let eta1 = zeta_fn(z + 1.0, tau)? - zeta_fn(*z, tau)?;
                let eta2 = zeta_fn(z + tau.tau(), tau)? - zeta_fn(*z, tau)?;
                let q_series = eta_periods(tau)?.eta1;
                Ok(((eta1 * tau.tau() - eta2 - TWO_PI_I).norm()).max((eta1 - q_series).norm()))
            },
        )
    }

    fn eta1_at_i(&self) -> CheckRecord {
        let trunc = LatticeTruncation::eisenstein(self.cfg.truncation.shell_radius);
        self.run(
            "eta1_at_i",
            "eta1(i) = pi from the q-series and from the Eisenstein-summed lattice sum",
            1e-8,
            vec![()],
            |_| {
                let tau = ModuliPoint::new(Complex64::new(0.0, 1.0))?;
                let series = eta_periods(&tau)?.eta1;
                let lattice = oracle::eta1_lattice(&tau, &trunc)?;
                Ok((series - PI).norm().max((lattice - PI).norm()))
            },
        )
    }

    fn wp_ode(&self) -> CheckRecord {
        let mut s = self.sampler("wp_ode");
        let points: Vec<(ModuliPoint, Complex64)> = (0..50).map(|_| (s.tau(), s.z())).collect();
        self.run(
            "wp_ode",
            "wp'^2 = 4 wp^3 - g2 wp - g3",
            1e-7,
            points,
            |(tau, z)| {
                let (p, dp) = wp(*z, tau)?;
                let (g2, g3) = g_invariants(tau)?;
                let lhs = dp * dp;
                Ok((lhs - (4.0 * p * p * p - g2 * p - g3)).norm() / lhs.norm().max(1.0))
            },
        )
    }

    fn heat_equation(&self) -> CheckRecord {
        let mut s = self.sampler("heat_equation");
        let points: Vec<KroneckerPoint> = (0..50)
            .map(|_| {
                let tau = s.tau();
                KroneckerPoint::new(s.z(), s.z(), tau)
            })
            .collect();
        let diff = self.cfg.diff;
        self.run(
            "heat_equation",
            "mixed heat equation 2 pi i dJ/dtau = d^2 J / dz dw",
            1e-6,
            points,
            move |p| heat_residual(p, &diff),
        )
    }

    fn taylor_heat(&self) -> CheckRecord {
        let mut s = self.sampler("taylor_heat");
        let points: Vec<(ModuliPoint, Complex64, u32)> = (0..10)
            .map(|i| {
                let tau = s.tau();
                let d = 2 + (i % 2) as u32;
                (tau, s.z_off_torsion(&tau, d, 1e-2), d)
            })
            .collect();
        let diff = self.cfg.diff;
        self.run(
            "taylor_heat",
            "d_tau s_k = (k+1)/(2 pi i) d_z s_{k+1} for k <= 3",
            1e-5,
            points,
            |(tau, z, d)| {
                let cauchy = self.cauchy(tau);
                let coeffs = |w: Complex64, t: &ModuliPoint| Ok(s_coeffs(w, t, *d, 4, &cauchy)?.coeffs);
                let dt = finite_diff_vec(|t| coeffs(*z, &ModuliPoint::new(t)?), tau.tau(), &diff)?;
                let dz = finite_diff_vec(|w| coeffs(w, tau), *z, &diff)?;
                Ok((0..=3)
                    .map(|k| (dt[k] - (k as f64 + 1.0) / TWO_PI_I * dz[k + 1]).norm())
                    .fold(0.0, f64::max))
            },
        )
    }

    fn curvature(&self) -> CheckRecord {
        let mut s = self.sampler("curvature");
        let taus: Vec<ModuliPoint> = (0..10).map(|_| s.tau()).collect();
        let points: Vec<(u32, ModuliPoint)> =
            taus.iter().flat_map(|t| (0..=4).map(move |n| (n, *t))).collect();
        let diff = self.cfg.diff;
        self.run(
            "curvature",
            "flatness of the absolute connection, levels 0..=4",
            1e-4,
            points,
            move |(n, tau)| curvature_residual(*n, tau, &diff),
        )
    }

    fn gauss_manin_periods(&self) -> CheckRecord {
        let mut s = self.sampler("gauss_manin_periods");
        let points: Vec<ModuliPoint> = (0..10).map(|_| s.tau()).collect();
        let diff = self.cfg.diff;
        self.run(
            "gauss_manin_periods",
            "Gauss-Manin matrix differentiates the periods (1, tau) and (eta, -eta2)",
            1e-6,
            points,
            move |tau| {
                let gm = gauss_manin_matrix(tau)?;
                let eta_period = |t: Complex64| -> Result<Complex64> {
                    Ok(-eta_periods(&ModuliPoint::new(t)?)?.eta2)
                };
                let (p_omega, p_eta) = (tau.tau(), eta_period(tau.tau())?);
                let d_eta = finite_diff(eta_period, tau.tau(), &diff)?;
                let r_omega = (1.0 - (gm[0][0] * p_omega + gm[1][0] * p_eta)).norm();
                let r_eta = (d_eta - (gm[0][1] * p_omega + gm[1][1] * p_eta)).norm() / d_eta.norm().max(1.0);
                Ok(r_omega.max(r_eta))
            },
        )
    }

    fn closedness(&self) -> CheckRecord {
        let mut s = self.sampler("closedness");
        let mut points = Vec::new();
        for _ in 0..10 {
            let tau = s.tau();
            let z = loop {
                let z = s.z();
                if (2..=3).all(|d| tau.lattice_distance(d as f64 * z) / d as f64 >= 1e-2) {
                    break z;
                }
            };
            for d in [2u32, 3] {
                for n in 0..=4u32 {
                    points.push((z, tau, d, n));
                }
            }
        }
        let diff = self.cfg.diff;
        self.run(
            "closedness",
            "L_n^D is closed under the absolute connection, n <= 4, D in {2, 3}",
            1e-4,
            points,
            |(z, tau, d, n)| closedness_residual_with(*z, tau, *d, *n, &diff, &self.cauchy(tau)),
        )
    }

    fn distribution_relation(&self) -> CheckRecord {
        let mut s = self.sampler("distribution_relation");
        let mut points = Vec::new();
        for _ in 0..50 {
            let tau = s.tau();
            let z = s.z();
            let w = loop {
                let w = s.z();
                if (2..=3).all(|d| tau.lattice_distance(d as f64 * w) >= 1e-3) {
                    break w;
                }
            };
            for d in [2u32, 3] {
                points.push((KroneckerPoint::new(z, w, tau), d));
            }
        }
        self.run(
            "distribution_relation",
            "sum over nonzero D-torsion translates of J(Dz, .) equals D^2 J(z, Dw) - D J(Dz, w)",
            1e-6,
            points,
            |(p, d)| distribution_residual(p, *d),
        )
    }

    fn pole_removal(&self) -> CheckRecord {
        let mut s = self.sampler("pole_removal");
        let points: Vec<(Complex64, ModuliPoint, u32)> = (0..10)
            .map(|i| {
                let tau = s.tau();
                let d = 2 + (i % 2) as u32;
                (s.z_off_torsion(&tau, d, 1e-2), tau, d)
            })
            .collect();
        self.run(
            "pole_removal",
            "max over |w| = 1e-3 of the D-variant divided by |s_0^D| (no 1/w growth)",
            10.0,
            points,
            |(z, tau, d)| {
                let (worst, s0) = pole_removal_bound(*z, tau, *d, 1e-3, 64)?;
                Ok(worst / s0.max(f64::MIN_POSITIVE))
            },
        )
    }

    fn s_coeffs_scaling(&self) -> CheckRecord {
        let mut s = self.sampler("s_coeffs_scaling");
        let points: Vec<(Complex64, ModuliPoint, u32)> = (0..10)
            .map(|i| {
                let tau = s.tau();
                let d = 2 + (i % 2) as u32;
                (s.z_off_torsion(&tau, d, 1e-2), tau, d)
            })
            .collect();
        self.run(
            "s_coeffs_scaling",
            "w^k coefficient of D^2 J(z, Dw) - D J(Dz, w) equals D^k s_k^D",
            1e-9,
            points,
            |(z, tau, d)| {
                let cfg = self.cauchy(tau);
                let s = s_coeffs(*z, tau, *d, 6, &cfg)?.coeffs;
                let df = *d as f64;
                let scaled_cfg = CauchyConfig {
                    radius: cfg.radius / df,
                    ..cfg
                };
                let kp = |a: Complex64, b: Complex64| crate::kronecker::jacobi_j(&KroneckerPoint::new(a, b, *tau));
                let scaled = cauchy_coeffs(
                    |w| Ok(df * df * kp(*z, df * w)? - df * kp(df * *z, w)?),
                    6,
                    &scaled_cfg,
                )?;
                let want: Vec<Complex64> = (0..=6).map(|k| df.powi(k as i32) * s[k]).collect();
                let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
                Ok((0..=6)
                    .map(|k| (scaled[k] - want[k]).norm() / want[k].norm().max(1e-3 * scale))
                    .fold(0.0, f64::max))
            },
        )
    }

    fn residue_origin(&self) -> CheckRecord {
        let mut s = self.sampler("residue_origin");
        let points: Vec<(ModuliPoint, u32)> = (0..5)
            .flat_map(|_| {
                let tau = s.tau();
                [(tau, 2u32), (tau, 3)]
            })
            .collect();
        self.run(
            "residue_origin",
            "contour integral of dlog theta_D around the origin is 2 pi i (D^2 - 1)",
            1e-7,
            points,
            |(tau, d)| {
                let df = *d as f64;
                let got = kato_siegel_residue(Complex64::new(0.0, 0.0), 0.05 / df, tau, *d)?;
                let want = TWO_PI_I * (df * df - 1.0);
                Ok((got - want).norm() / want.norm())
            },
        )
    }

    fn residue_torsion(&self) -> CheckRecord {
        let mut s = self.sampler("residue_torsion");
        let mut points = Vec::new();
        for _ in 0..3 {
            let tau = s.tau();
            for d in [2u32, 3] {
                for c in 0..d as i64 {
                    for dd in 0..d as i64 {
                        if (c, dd) != (0, 0) {
                            points.push((tau, d, (c as f64 * tau.tau() + dd as f64) / d as f64));
                        }
                    }
                }
            }
        }
        self.run(
            "residue_torsion",
            "contour integral of dlog theta_D around a nonzero D-torsion point is -2 pi i",
            1e-7,
            points,
            |(tau, d, t)| {
                let got = kato_siegel_residue(*t, 0.05 / *d as f64, tau, *d)?;
                Ok((got + TWO_PI_I).norm() / TWO_PI_I.norm())
            },
        )
    }

    fn norm_trace(&self) -> CheckRecord {
        let mut s = self.sampler("norm_trace");
        let mut points = Vec::new();
        for _ in 0..10 {
            let tau = s.tau();
            for (m, d) in [(2i64, 3u32), (3, 2)] {
                let z = loop {
                    let z = s.z_off_torsion(&tau, d, 1e-2);
                    let ok = (0..m).all(|c| {
                        (0..m).all(|dd| {
                            let u = (z + c as f64 * tau.tau() + dd as f64) / m as f64;
                            tau.lattice_distance(d as f64 * u) / d as f64 >= 1e-2
                        })
                    });
                    if ok {
                        break z;
                    }
                };
                points.push((z, tau, m, d));
            }
        }
        self.run(
            "norm_trace",
            "(1/M) sum over M-division translates of dlog theta_D equals dlog theta_D, gcd(M, D) = 1",
            1e-7,
            points,
            |(z, tau, m, d)| {
                let mf = *m as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..*m {
                    for dd in 0..*m {
                        let u = (z + c as f64 * tau.tau() + dd as f64) / mf;
                        acc += dlog_kato_siegel(u, tau, *d)?;
                    }
                }
                let want = dlog_kato_siegel(*z, tau, *d)?;
                Ok((acc / mf - want).norm() / want.norm().max(1.0))
            },
        )
    }

    fn l0_dlog(&self) -> CheckRecord {
        let mut s = self.sampler("l0_dlog");
        let points: Vec<(Complex64, ModuliPoint, u32)> = (0..50)
            .map(|i| {
                let tau = s.tau();
                let d = 2 + (i % 2) as u32;
                (s.z_off_torsion(&tau, d, 1e-2), tau, d)
            })
            .collect();
        self.run(
            "l0_dlog",
            "level-0 coefficient of l_n^D equals D^2 zeta(z) - D zeta(Dz)",
            1e-8,
            points,
            |(z, tau, d)| {
                let l = l_form(*z, tau, *d, 0)?;
                let got = l.dz().expect("l_form is a one-form").get(crate::logsheaf::DividedIndex::new(0, 0));
                let df = *d as f64;
                let want = df * df * zeta_fn(*z, tau)? - df * zeta_fn(df * z, tau)?;
                Ok((got - want).norm() / want.norm().max(1e-300))
            },
        )
    }

    fn naive_trunc(&self) -> LatticeTruncation {
        self.cfg.truncation
    }

    fn naive_vs_lipschitz(&self) -> CheckRecord {
        let tau = ModuliPoint::new(Complex64::new(0.0, 1.3)).expect("fixed tau is valid");
        let trunc = self.naive_trunc();
        self.run(
            "naive_vs_lipschitz",
            "direct lattice sum and Lipschitz evaluation of F^(k)_(0,1), N = 4, tau = 1.3i, k in {3, 4, 5}",
            1e-5,
            vec![3u32, 4, 5],
            move |k| {
                let q = EisensteinQuery::new(0, 1, 4, *k, tau, trunc, SumMode::Lipschitz)?;
                let l = eisenstein_f(&q)?;
                let n = eisenstein_f(&EisensteinQuery { mode: SumMode::Naive, ..q })?;
                Ok((n - l).norm() / l.norm())
            },
        )
    }

    fn parity(&self) -> CheckRecord {
        let mut s = self.sampler("parity");
        let points: Vec<(ModuliPoint, i64, i64, i64, u32)> = (0..16)
            .map(|i| {
                let tau = s.tau();
                let level = 3 + (i % 3) as i64;
                let (a, b) = s.label(level, 1);
                (tau, a, b, level, 1 + (i % 8) as u32)
            })
            .collect();
        self.run(
            "parity",
            "F^(k)_(-a,-b) = (-1)^k F^(k)_(a,b)",
            1e-9,
            points,
            |(tau, a, b, level, k)| {
                if *k == 1 && a % level == 0 {
                    return Ok(0.0);
                }
                let q = EisensteinQuery::new(*a, *b, *level, *k, *tau, LatticeTruncation::default(), SumMode::Lipschitz)?;
                let f = eisenstein_f(&q)?;
                let g = eisenstein_f(&q.with_label(-a, -b)?)?;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Ok((g - sign * f).norm() / f.norm().max(1.0))
            },
        )
    }

    fn weight2_consistency(&self) -> CheckRecord {
        let mut s = self.sampler("weight2_consistency");
        let points: Vec<(ModuliPoint, i64, i64, i64)> = (0..4)
            .map(|i| {
                let tau = s.tau();
                let level = 3 + (i % 3) as i64;
                let (a, b) = s.label(level, 1);
                (tau, a, b, level)
            })
            .collect();
        let radius = self.cfg.truncation.shell_radius.min(1000);
        self.run(
            "weight2_consistency",
            "Eisenstein-summed F^(2) agrees with its Lipschitz evaluation",
            1e-4,
            points,
            move |(tau, a, b, level)| {
                let naive = eisenstein_sum_k2(*a, *b, *level, tau, &LatticeTruncation::eisenstein(radius))?;
                let q = EisensteinQuery::new(*a, *b, *level, 2, *tau, LatticeTruncation::default(), SumMode::Lipschitz)?;
                let l = eisenstein_f(&q)?;
                Ok((naive - l).norm() / l.norm().max(1.0))
            },
        )
    }

    fn translation(&self) -> CheckRecord {
        let mut s = self.sampler("translation");
        let points: Vec<(ModuliPoint, i64, i64, i64, u32)> = (0..8)
            .map(|i| {
                let tau = s.tau();
                let level = 3 + (i % 3) as i64;
                let (a, b) = s.label(level, 1);
                (tau, a, b, level, 3 + (i % 3) as u32)
            })
            .collect();
        self.run(
            "translation",
            "F^(k)_(a,b)(tau + 1) = F^(k)_(a,a+b)(tau)",
            1e-8,
            points,
            |(tau, a, b, level, k)| {
                let trunc = LatticeTruncation::default();
                let shifted = tau.shifted(Complex64::new(1.0, 0.0))?;
                let lhs = eisenstein_f(&EisensteinQuery::new(*a, *b, *level, *k, shifted, trunc, SumMode::Lipschitz)?)?;
                let rhs = eisenstein_f(&EisensteinQuery::new(*a, a + b, *level, *k, *tau, trunc, SumMode::Lipschitz)?)?;
                Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
            },
        )
    }

    fn specialization(&self) -> CheckRecord {
        let mut s = self.sampler("specialization");
        let mut points = Vec::new();
        for k in [2u32, 3, 4] {
            for level in [3i64, 4, 5] {
                for d in [2u32, 3] {
                    // F~ is undefined when D kills every label of level N
                    if d as i64 % level == 0 {
                        continue;
                    }
                    for _ in 0..5 {
                        let tau = s.tau();
                        // relative residuals need F~ not identically zero
                        let (a, b) = if k % 2 == 0 {
                            s.label_off_two_torsion(level, d)
                        } else {
                            s.label(level, d)
                        };
                        points.push((k, level, d, a, b, tau));
                    }
                }
            }
        }
        self.run_with_rows(
            "specialization",
            "torsion specialization sum equals F~^(k+1)_(a,b)",
            1e-6,
            points,
            |(k, level, d, a, b, tau)| {
                let trunc = LatticeTruncation::default();
                let label = TorsionLabel::new(*a, *b, *level, *d)?;
                let specialized = specialize_eisenstein(&label, tau, *k, &trunc, SumMode::Lipschitz)?;
                let q = EisensteinQuery::new(*a, *b, *level, k + 1, *tau, trunc, SumMode::Lipschitz)?;
                let tilde = eisenstein_f_tilde(&q, *d)?;
                let residual = (specialized - tilde).norm() / tilde.norm();
                let row = json!({
                    "k": k,
                    "N": level,
                    "D": d,
                    "a": a,
                    "b": b,
                    "tau": json_complex(tau.tau()),
                    "specialized": json_complex(specialized),
                    "f_tilde": json_complex(tilde),
                    "residual": json_number(residual),
                });
                Ok((residual, Some(row)))
            },
        )
    }
}
