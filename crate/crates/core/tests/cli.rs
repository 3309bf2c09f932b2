use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DEFAULT_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/qtltt_default.json");

fn chronoloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronoloop"))
        .args(args)
        .env_remove("CHRONOLOOP_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn default_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(DEFAULT_CONFIG).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = default_json();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn two_pass_forced_left() {
    let out = chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-left"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["tool"], "chronoloop");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["seed"], 20240601);
    let result = &report["result"];
    assert_eq!(result["triggered"], true);
    assert_eq!(result["first_outcome"], "left");
    assert_eq!(pair(&result["second_pass"]["psi4"][0]), (0.0, 0.0));
    let (re, im) = pair(&result["second_pass"]["psi3"][0]);
    assert!((re - 1.0).abs() < 1e-12 && (im + 1.0).abs() < 1e-12);
    assert_eq!(result["paradox"].as_f64(), Some(1.0));
}

#[test]
fn two_pass_forced_right() {
    let out = chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-right"]);
    assert_eq!(out.status.code(), Some(0));
    let result = &json(&out)["result"];
    assert_eq!(result["triggered"], false);
    assert!(result["second_pass"].is_null());
    assert!(result["paradox"].is_null());
}

#[test]
fn force_flags_conflict() {
    let out = chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-left", "--force-right"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn amplitudes_carry_full_precision() {
    let out = chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-left"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("7.0710678118654757e-1"), "{text}");
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad_dims = write_config(dir.path(), "dims.json", |v| {
        v["g1"] = serde_json::json!([[1, 0], [0, 0]]);
    });
    let not_json = dir.path().join("garbage.json");
    std::fs::write(&not_json, "{ nope").unwrap();
    let off_circle = write_config(dir.path(), "splitter.json", |v| {
        v["alpha"] = serde_json::json!(0.5);
    });
    for path in [&bad_dims, &not_json, &off_circle] {
        let out = chronoloop(&["two-pass", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{}", path.display());
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(chronoloop(&["two-pass", "/nonexistent/config.json"]).status.code(), Some(1));
}

#[test]
fn zero_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "zero.json", |v| v["psi"] = serde_json::json!([[0, 0]]));
    assert_eq!(chronoloop(&["two-pass", zero.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(chronoloop(&["monte-carlo", zero.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn loop_solve_identity_feedback() {
    for extra in [&[][..], &["--iterative", "--tol", "1e-14"][..]] {
        let mut args = vec!["loop-solve", DEFAULT_CONFIG];
        args.extend_from_slice(extra);
        let out = chronoloop(&args);
        assert_eq!(out.status.code(), Some(0));
        let result = &json(&out)["result"];
        let (re, im) = pair(&result["psi4"][0]);
        assert!((re - 0.4).abs() < 1e-12 && (im + 0.2).abs() < 1e-12, "{re} {im}");
        assert!(result["residual"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn loop_solve_without_feedback_matches_open_loop() {
    let dir = tempfile::tempdir().unwrap();
    let no_m = write_config(dir.path(), "m0.json", |v| v["m"] = serde_json::json!([[0, 0]]));
    let out = chronoloop(&["loop-solve", no_m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let loop_psi4 = json(&out)["result"]["psi4"].clone();
    let open = json(&chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-right"]));
    assert_eq!(loop_psi4, open["result"]["first_pass"]["psi4"]);
}

#[test]
fn loop_solve_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let singular = write_config(dir.path(), "singular.json", |v| v["m"] = serde_json::json!([[-1, -1]]));
    assert_eq!(chronoloop(&["loop-solve", singular.to_str().unwrap()]).status.code(), Some(3));

    let gain = write_config(dir.path(), "gain.json", |v| v["m"] = serde_json::json!([[2, 0]]));
    let out = chronoloop(&["loop-solve", gain.to_str().unwrap(), "--iterative", "--max-iter", "200"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(chronoloop(&["loop-solve", gain.to_str().unwrap()]).status.code(), Some(0));

    let missing = write_config(dir.path(), "no_m.json", |v| {
        v.as_object_mut().unwrap().remove("m");
    });
    assert_eq!(chronoloop(&["loop-solve", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn phase_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = chronoloop(&["phase-sweep", DEFAULT_CONFIG, "--points", "5", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["points"], 5);

    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,p_left_second,paradox"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let want_p = [0.0, 0.5, 1.0, 0.5, 0.0];
    for (k, row) in rows.iter().enumerate() {
        let phi = std::f64::consts::TAU * k as f64 / 4.0;
        assert!((row[0] - phi).abs() < 1e-15);
        assert!((row[1] - want_p[k]).abs() < 1e-12);
        assert!((row[1] - (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
        assert!((row[2] - (1.0 - row[1])).abs() < 1e-15);
    }
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[0][2], 1.0);
    // every value has at least 12 significant digits
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert!(mantissa.chars().filter(char::is_ascii_digit).count() >= 12, "{field}");
    }
}

#[test]
fn phase_sweep_point_limits() {
    let out = chronoloop(&["phase-sweep", DEFAULT_CONFIG, "--points", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
    assert_eq!(chronoloop(&["phase-sweep", DEFAULT_CONFIG, "--points", "1"]).status.code(), Some(1));
    let out = chronoloop(&["phase-sweep", DEFAULT_CONFIG, "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monte_carlo_reports() {
    let out = chronoloop(&["monte-carlo", DEFAULT_CONFIG, "--trials", "100000", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["seed"], 42);
    let result = &report["result"];
    assert_eq!(result["trials"], 100000);
    let freq = result["trigger_frequency"].as_f64().unwrap();
    assert!((freq - 0.5).abs() <= 0.005, "{freq}");
    assert_eq!(result["mean_paradox"].as_f64(), Some(1.0));

    let single_a = chronoloop(&["monte-carlo", DEFAULT_CONFIG, "--trials", "1", "--seed", "8"]);
    let single_b = chronoloop(&["monte-carlo", DEFAULT_CONFIG, "--trials", "1", "--seed", "8"]);
    assert_eq!(single_a.stdout, single_b.stdout);
}

#[test]
fn monte_carlo_opposite_phase() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pi.json", |v| {
        v["injection"] = serde_json::json!({"mode": "dephased", "phi": std::f64::consts::PI});
    });
    let out = chronoloop(&["monte-carlo", cfg.to_str().unwrap(), "--trials", "5000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["result"]["mean_paradox"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn monte_carlo_thread_cap_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_chronoloop"))
        .args(["monte-carlo", DEFAULT_CONFIG, "--trials", "10"])
        .env("CHRONOLOOP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = chronoloop(&["two-pass", DEFAULT_CONFIG, "--dump-config"]);
    assert_eq!(first.status.code(), Some(0));
    let dumped = dir.path().join("dumped.json");
    std::fs::write(&dumped, &first.stdout).unwrap();
    let second = chronoloop(&["--dump-config", "loop-solve", dumped.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);

    let a = json(&chronoloop(&["two-pass", DEFAULT_CONFIG, "--force-left"]));
    let b = json(&chronoloop(&["two-pass", dumped.to_str().unwrap(), "--force-left"]));
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(a, b);
}

#[test]
fn explicit_injection_from_config() {
    let dir = tempfile::tempdir().unwrap();
    // M = (1 + i)/√2 carries the normalized left output (1 − i)/√2 onto ψ = 1
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cfg = write_config(dir.path(), "explicit.json", |v| {
        v["m"] = serde_json::json!([[h, h]]);
        v["injection"] = serde_json::json!({"mode": "explicit"});
    });
    let out = chronoloop(&["two-pass", cfg.to_str().unwrap(), "--force-left"]);
    assert_eq!(out.status.code(), Some(0));
    let paradox = json(&out)["result"]["paradox"].as_f64().unwrap();
    assert!((paradox - 1.0).abs() < 1e-12);
}

#[test]
fn non_unitary_propagator_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lossy.json", |v| v["g1"] = serde_json::json!([[0.5, 0]]));
    let out = chronoloop(&["two-pass", cfg.to_str().unwrap(), "--force-left"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: g1 is not unitary"));
    assert_eq!(json(&out)["warnings"][0], "g1 is not unitary; output norm is not conserved");
}

#[test]
fn verify_passes() {
    let out = chronoloop(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("open-loop even split"));
    assert!(table.contains("cancellation for random unitary G"));
    assert!(!table.contains("FAIL"));
}
