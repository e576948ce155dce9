use std::process::{Command, Output};

use serde_json::Value;

fn elpolylog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elpolylog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn scratch_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("elpolylog-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_heat_reports_fifty_points() {
    let out = elpolylog(&["verify", "heat", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_stdout(&out);
    assert_eq!(report["schema"], "1");
    assert_eq!(report["suite"], "heat");
    assert_eq!(report["pass"], true);
    let heat = check(&report, "heat_equation");
    assert_eq!(heat["points_tested"], 50);
    assert!(heat["max_residual"].as_f64().unwrap() < 1e-6);
    assert!(heat.get("runtime_ms").is_none());
}

#[test]
fn tolerance_override_is_honored() {
    let out = elpolylog(&["verify", "closedness", "--tolerance", "closedness=1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_stdout(&out);
    assert_eq!(check(&report, "closedness")["tolerance"].as_f64(), Some(1e-3));
}

#[test]
fn failing_check_exits_one() {
    let out = elpolylog(&["verify", "weierstrass", "--tolerance", "wp_ode=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_stdout(&out);
    assert_eq!(report["pass"], false);
    assert_eq!(check(&report, "wp_ode")["pass"], false);
    assert_eq!(check(&report, "legendre")["pass"], true);
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["verify", "nosuchsuite"][..],
        &["verify", "heat", "--tolerance", "nosuchcheck=1e-3"],
        &["verify", "heat", "--tolerance", "heat_equation=-1"],
        &["verify", "heat", "--tolerance", "heat_equation"],
        &["verify", "heat", "--parallelism", "0"],
        &["verify", "heat", "--config", "/nonexistent/config"],
    ] {
        let out = elpolylog(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn config_file_key_value_and_json() {
    let dir = scratch_dir();
    let kv = dir.join("run.conf");
    std::fs::write(&kv, "seed = 11\nparallelism = 2\ntolerance.heat_equation = 2e-6\n").unwrap();
    let report = json_stdout(&elpolylog(&["verify", "heat", "--config", kv.to_str().unwrap()]));
    assert_eq!(report["seed"], 11);
    assert_eq!(check(&report, "heat_equation")["tolerance"].as_f64(), Some(2e-6));

    let js = dir.join("run.json");
    std::fs::write(&js, r#"{"seed": 11, "tolerance_overrides": {"heat_equation": 2e-6}}"#).unwrap();
    let out_path = dir.join("report.json");
    let out = elpolylog(&[
        "verify",
        "heat",
        "--config",
        js.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let from_file: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(from_file, report);

    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "seed 11\n").unwrap();
    assert_eq!(elpolylog(&["verify", "heat", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_parallelism() {
    let one = elpolylog(&["verify", "all", "--seed", "3", "--parallelism", "1"]);
    let eight = elpolylog(&["verify", "all", "--seed", "3", "--parallelism", "8"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn specialization_rows_are_reported() {
    let report = json_stdout(&elpolylog(&["verify", "specialization"]));
    let record = check(&report, "specialization");
    let rows = record["rows"].as_array().unwrap();
    assert_eq!(rows.len(), record["points_tested"].as_u64().unwrap() as usize);
    for row in rows {
        for key in ["k", "N", "D", "a", "b", "tau", "specialized", "f_tilde", "residual"] {
            assert!(row.get(key).is_some(), "row lacks {key}");
        }
        assert!(row["residual"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn eval_single_values() {
    let j = json_stdout(&elpolylog(&["eval", "J", "--z", "0.2", "--w", "0.3", "--tau", "0+1i"]));
    assert!(j["value"]["re"].is_number() && j["value"]["im"].is_number());

    let f = json_stdout(&elpolylog(&[
        "eval", "F", "--k", "3", "--N", "4", "--a", "0", "--b", "1", "--tau", "0+1.3i", "--mode", "lipschitz",
    ]));
    let naive = json_stdout(&elpolylog(&[
        "eval", "F", "--k", "3", "--N", "4", "--a", "0", "--b", "1", "--tau", "0+1.3i", "--mode", "naive",
    ]));
    let (fl, fnv) = (f["value"]["re"].as_f64().unwrap(), naive["value"]["re"].as_f64().unwrap());
    assert!((fl - fnv).abs() < 1e-5 * fl.abs());

    let d = json_stdout(&elpolylog(&["eval", "dlogtheta", "--z", "0.21+0.1i", "--D", "2", "--tau", "0+1.1i"]));
    assert!(d["value"]["re"].is_number());

    let s = json_stdout(&elpolylog(&["eval", "s_coeffs", "--z", "0.21+0.1i", "--D", "3", "--n", "3", "--tau", "0.1+1.1i"]));
    assert_eq!(s["coeffs"].as_array().unwrap().len(), 4);

    let t = json_stdout(&elpolylog(&[
        "eval", "F_tilde", "--k", "3", "--N", "4", "--a", "1", "--b", "0", "--D", "2", "--tau", "0+1.3i",
    ]));
    assert!(t["value"]["re"].is_number());
}

#[test]
fn eval_l_form_table() {
    let out = json_stdout(&elpolylog(&["eval", "L_form", "--n", "2", "--D", "2", "--z", "0.23", "--tau", "0+1.2i"]));
    assert_eq!(out["level"], 2);
    for part in ["dz", "dtau"] {
        let table = out[part].as_object().unwrap();
        assert!(table.contains_key("0,0"), "{part}: {table:?}");
        for v in table.values() {
            assert!(v["re"].is_number() && v["im"].is_number());
        }
    }
}

#[test]
fn eval_missing_parameter_prints_usage() {
    let out = elpolylog(&["eval", "F", "--k", "3", "--tau", "0+1i"]);
    assert_ne!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing --a") && err.contains("usage"), "{err}");
    let bad = elpolylog(&["eval", "J", "--z", "zero", "--w", "0.3", "--tau", "0+1i"]);
    assert_ne!(bad.status.code(), Some(0));
}
