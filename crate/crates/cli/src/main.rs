use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elliptic_polylog::eisenstein::{eisenstein_f, eisenstein_f_tilde, EisensteinQuery, SumMode};
use elliptic_polylog::kronecker::{default_s_cauchy, dlog_kato_siegel, jacobi_j, s_coeffs, KroneckerPoint};
use elliptic_polylog::logsheaf::LogFiber;
use elliptic_polylog::polylog::L_form_with;
use elliptic_polylog::verify::{json_complex, run_suite, RunConfig, Suite};
use elliptic_polylog::{Error, ModuliPoint};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "elpolylog", version, about = "Elliptic polylogarithm evaluation and identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print a JSON report.
    Verify(VerifyArgs),
    /// Evaluate a single function and print JSON.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file: JSON object or `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-check tolerance, `name=value`; repeatable.
    #[arg(long = "tolerance", value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    #[command(flatten)]
    config: ConfigArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-check wall time in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    #[value(name = "J")]
    J,
    #[value(name = "s_coeffs")]
    SCoeffs,
    #[value(name = "F")]
    F,
    #[value(name = "F_tilde")]
    FTilde,
    #[value(name = "dlogtheta")]
    DlogTheta,
    #[value(name = "L_form")]
    LForm,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    target: Target,
    #[command(flatten)]
    config: ConfigArgs,
    /// Complex numbers as `re`, `re+imi` or `re-imi`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    w: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    tau: Option<Complex64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long = "N")]
    level: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<i64>,
    #[arg(long = "D")]
    d: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SumMode>,
}

fn parse_mode(s: &str) -> Result<SumMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `x`, `yi`, `x+yi`, `x-yi` (also `j` for the imaginary unit).
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("invalid complex number {s:?}; expected e.g. 0+1.2i");
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    for item in &args.tolerances {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--tolerance expects NAME=VALUE, got {item:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid tolerance value in {item:?}")))?;
        cfg.tolerance_overrides.insert(name.trim().to_string(), value);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn verify(args: VerifyArgs) -> Result<bool, Error> {
    let suite: Suite = args.suite.parse()?;
    let mut cfg = load_config(&args.config)?;
    cfg.timings |= args.timings;
    let report = run_suite(suite, &cfg)?;
    let mut text = report.to_json_string();
    text.push('\n');
    match &args.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?,
        // a closed pipe downstream is not an error here
        None => {
            let _ = io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(report.pass)
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Error> {
    value.ok_or_else(|| Error::InvalidInput(format!("missing --{flag}")))
}

fn fiber_json(fiber: &LogFiber) -> Value {
    let mut m = Map::new();
    for (idx, v) in fiber.iter() {
        m.insert(format!("{},{}", idx.i, idx.j), json_complex(v));
    }
    Value::Object(m)
}

fn eval(args: EvalArgs) -> Result<Value, Error> {
    let cfg = load_config(&args.config)?;
    let tau = ModuliPoint::new(require(args.tau, "tau")?)?;
    let value = match args.target {
        Target::J => {
            let p = KroneckerPoint::new(require(args.z, "z")?, require(args.w, "w")?, tau);
            json!({ "value": json_complex(jacobi_j(&p)?) })
        }
        Target::SCoeffs => {
            let cauchy = cfg.cauchy.unwrap_or_else(|| default_s_cauchy(&tau));
            let order = args.n.unwrap_or(4) as usize;
            let s = s_coeffs(require(args.z, "z")?, &tau, require(args.d, "D")?, order, &cauchy)?;
            json!({ "coeffs": s.coeffs.iter().copied().map(json_complex).collect::<Vec<_>>() })
        }
        Target::F | Target::FTilde => {
            let q = EisensteinQuery::new(
                require(args.a, "a")?,
                require(args.b, "b")?,
                require(args.level, "N")?,
                require(args.k, "k")?,
                tau,
                cfg.truncation,
                args.mode.unwrap_or(SumMode::Lipschitz),
            )?;
            let v = match args.target {
                Target::F => eisenstein_f(&q)?,
                _ => eisenstein_f_tilde(&q, require(args.d, "D")?)?,
            };
            json!({ "value": json_complex(v) })
        }
        Target::DlogTheta => {
            let v = dlog_kato_siegel(require(args.z, "z")?, &tau, require(args.d, "D")?)?;
            json!({ "value": json_complex(v) })
        }
        Target::LForm => {
            let cauchy = cfg.cauchy.unwrap_or_else(|| default_s_cauchy(&tau));
            let form = L_form_with(require(args.z, "z")?, &tau, require(args.d, "D")?, require(args.n, "n")?, &cauchy)?;
            let (dz, dtau) = (form.dz().expect("one-form"), form.dtau().expect("one-form"));
            json!({ "level": form.level(), "dz": fiber_json(dz), "dtau": fiber_json(dtau) })
        }
    };
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => match verify(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_FAIL),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Eval(args) => match eval(args) {
            Ok(v) => {
                let mut out = Map::new();
                out.insert("schema".into(), json!("1"));
                if let Value::Object(m) = v {
                    out.extend(m);
                }
                let text = serde_json::to_string_pretty(&Value::Object(out)).expect("serializable");
                let _ = writeln!(io::stdout().lock(), "{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                eprintln!("usage: elpolylog eval <TARGET> --tau RE+IMi [--z ..] [--w ..] [--k ..] [--N ..] [--a ..] [--b ..] [--D ..] [--n ..] [--mode naive|lipschitz]");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
