use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ddsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddsim")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

const SYSTEM: &str = r#""system": {"ell": 2, "theta_lin": [0, 0, 1, 0, 0], "theta_nl": [1, -0.1],
    "basis": ["sin(y[-1])", "y[-2]^2"]}"#;

fn simulated(dir: &Path, len: usize) -> String {
    let cfg = format!(r#"{{{SYSTEM}, "init": {{"u_past": [0, 0], "y_past": [1, 1]}}, "input": {{"len": {len}}}}}"#);
    fs::write(dir.join("sim.json"), cfg).unwrap();
    let out = path(dir, "sim.csv");
    let o = ddsim(&["simulate", "--config", &path(dir, "sim.json"), "--seed", "4", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    path(dir, name)
}

#[test]
fn simulate_writes_init_window_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fs::read_to_string(simulated(dir.path(), 10)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,u,y");
    assert_eq!(lines.len(), 1 + 2 + 10);
    assert_eq!(lines[1], "1,0,1");
    // y(3) = sin(1) - 0.1 + u(1) with u(1) = 0
    let y3: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
    assert!((y3 - (1f64.sin() - 0.1)).abs() < 1e-15);
}

#[test]
fn explicit_input_samples_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        &format!(r#"{{{SYSTEM}, "init": {{"u_past": [0, 0], "y_past": [1, 1]}}, "input": [0.5, 0.25]}}"#),
    );
    let o = ddsim(&["simulate", "--config", &cfg]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\n3,0.5,"));
    assert!(text.contains("\n4,0.25,"));
}

#[test]
fn noise_changes_outputs_only() {
    let dir = tempfile::tempdir().unwrap();
    let clean = simulated(dir.path(), 20);
    let o = ddsim(&["noise", "--data", &clean, "--mu", "0.1", "--seed", "2"]);
    assert!(o.status.success());
    let noisy = String::from_utf8(o.stdout).unwrap();
    let clean = fs::read_to_string(clean).unwrap();
    for (a, b) in clean.lines().zip(noisy.lines()).skip(1) {
        let (a, b): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
        assert_eq!(a[..2], b[..2]);
        assert_ne!(a[2], b[2]);
    }
}

#[test]
fn rank_and_identify_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), 66);
    let cfg = write(dir.path(), "m.json", r#"{"ell": 2, "basis": ["sin(y[-1])", "y[-2]^2"], "rows": 3}"#);
    let o = ddsim(&["rank", "--data", &data, "--config", &cfg]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["observed_rank"], 11);
    assert_eq!(report["satisfied"], true);

    let o = ddsim(&["identify", "--data", &data, "--config", &cfg]);
    assert!(o.status.success());
    let theta: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let nl: Vec<f64> = serde_json::from_value(theta["theta_nl"].clone()).unwrap();
    assert!((nl[0] - 1.0).abs() < 1e-8 && (nl[1] + 0.1).abs() < 1e-8);
    assert_eq!(theta["basis"][1], "y[-2]^2");
}

#[test]
fn predict_and_equiv() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), 66);
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"basis": ["sin(y[-1])", "y[-2]^2"], "init": {"u_past": [0.1, 0.2], "y_past": [0.5, 0.4]},
            "future_input": [0.3, -0.2]}"#,
    );
    let o = ddsim(&["predict", "--data", &data, "--config", &cfg, "--mode", "ridge", "--lambda", "1e-9"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,u,y");
    let y1: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    // y = sin(0.4) - 0.1 * 0.5^2 + 0.1
    assert!((y1 - (0.4f64.sin() - 0.025 + 0.1)).abs() < 1e-6);

    let eq = write(
        dir.path(),
        "e.json",
        r#"{"basis": ["sin(y[-1])", "y[-2]^2"], "init": {"u_past": [0.1, 0.2], "y_past": [0.5, 0.4]}, "u_next": 0.3}"#,
    );
    let o = ddsim(&["equiv", "--data", &data, "--config", &eq]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["equivalent"], true);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), 66);
    assert_eq!(ddsim(&["bogus"]).status.code(), Some(1));
    assert_eq!(ddsim(&["identify", "--data", &data]).status.code(), Some(1));
    let missing = path(dir.path(), "missing.json");
    assert_eq!(ddsim(&["identify", "--data", &data, "--config", &missing]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.json", r#"{"ell": 2, "basis": ["sin(y[-1]"]}"#);
    let o = ddsim(&["identify", "--data", &data, "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let cfg = write(dir.path(), "m.json", r#"{"ell": 2, "basis": ["y[-1]"]}"#);
    assert_eq!(ddsim(&["noise", "--data", &data, "--mu", "-1"]).status.code(), Some(1));
    assert_eq!(ddsim(&["rank", "--data", &data, "--config", &cfg, "--tol", "nan"]).status.code(), Some(1));
    assert_eq!(
        ddsim(&["experiment", "--out", &path(dir.path(), "x"), "--mode", "ridge", "--lambda", "-1"]).status.code(),
        Some(1)
    );
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), 66);
    let cfg = write(dir.path(), "dup.json", r#"{"ell": 2, "basis": ["sin(y[-1])", "sin(y[-1])"]}"#);
    let o = ddsim(&["identify", "--data", &data, "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank deficient"));
}

#[test]
fn help_exits_cleanly() {
    let o = ddsim(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["simulate", "noise", "rank", "identify", "predict", "equiv", "experiment"] {
        assert!(text.contains(cmd));
    }
}

#[test]
fn experiment_writes_outputs_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"system": {"ell": 2, "theta_lin": [0, 0, 1, 0, 0], "theta_nl": [1, -0.1], "basis": ["sin(y[-1])", "y[-2]^2"]},
            "y_start": [1, 1], "fit_basis": ["sin(y[-1])", "y[-2]^2"], "ell": 2, "t_true": 45, "t_data": 40,
            "trials": 2, "mu": 0.05, "horizon": 3, "base_seed": 1, "solve": {"mode": "min-norm"}}"#,
    );
    let out = path(dir.path(), "out");
    let o = ddsim(&["experiment", "--config", &cfg, "--out", &out, "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trials = fs::read_to_string(dir.path().join("out/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 6);
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/config.json")).unwrap()).unwrap();
    assert_eq!(echo["base_seed"], 9);
    assert!(!dir.path().join("out/grid.csv").exists());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["completed"], 2);
}

#[test]
fn partial_experiment_config_uses_reference_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", r#"{"trials": 3, "lambda_grid": [1e-4, 1e-2]}"#);
    let out = path(dir.path(), "out");
    let o = ddsim(&["experiment", "--config", &cfg, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = fs::read_to_string(dir.path().join("out/grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 3);
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 10);
}
