//! End-to-end runs of the `geophase` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geophase")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(stdout(out).trim()).unwrap()
}

#[test]
fn compute_reports_phase_and_closed_form() {
    let v = json(&run(&["compute", "--steps", "4000"]));
    let gamma = v["gamma"].as_f64().unwrap();
    let closed = v["closed_form_gamma"].as_f64().unwrap();
    assert!((gamma - closed).abs() < 1e-6);
    assert_eq!(v["inputs"]["scenario"], "dephasing");
    assert_eq!(v["diagnostics"]["samples"], 4001);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"dephasing\"\neta = 2.0\nlambda = 0.05\nsteps = 1000\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&run(&["compute", "--config", cfg, "--eta", "1.5"]));
    assert_eq!(v["inputs"]["eta"], 1.5);
    assert_eq!(v["inputs"]["lambda"], 0.05);
    assert_eq!(v["inputs"]["steps"], 1000);
}

#[test]
fn config_errors_exit_with_2() {
    for args in [
        &["compute", "--eta", "-1"][..],
        &["compute", "--scenario", "nope"],
        &["compute", "--config", "/nonexistent/run.toml"],
        &["compute", "--theta0", "4"],
        &["sweep", "--param", "colour", "--values", "1"],
        &["sweep", "--param", "eta", "--values", "1,x"],
        &["compute", "--scenario", "imported-path"],
        &["frobnicate"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scenario = \"dephasing\"\nlamda = 0.1\n").unwrap();
    assert_eq!(run(&["compute", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_with_3() {
    let out = run(&["compute", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_writes_csv_rows_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--param",
        "lambda-ratio",
        "--values",
        "0.3,0,0.1",
        "--steps",
        "1000",
        "--workers",
        "3",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&file).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("param,value,gamma"));
    let values: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, [0.3, 0.0, 0.1]);
}

#[test]
fn sweep_records_failing_rows() {
    let out = run(&["sweep", "--param", "steps", "--values", "2,500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("negative eigenvalue"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn fringe_peaks_at_alpha() {
    let out = run(&["fringe", "--steps", "1000", "--chi-points", "64", "--format", "json"]);
    let v = json(&out);
    let alpha = v["alpha"].as_f64().unwrap();
    let nu = v["visibility"].as_f64().unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 64);
    let peak = rows.iter().max_by(|a, b| a[1].as_f64().unwrap().total_cmp(&b[1].as_f64().unwrap())).unwrap();
    let offset = (peak[0].as_f64().unwrap() - alpha).rem_euclid(2.0 * std::f64::consts::PI);
    let step = 2.0 * std::f64::consts::PI / 64.0;
    assert!(offset.min(2.0 * std::f64::consts::PI - offset) <= step / 2.0 + 1e-12);
    assert!(peak[1].as_f64().unwrap() <= 1.0 + nu);
}

#[test]
fn converge_shows_second_order() {
    let out = run(&["converge", "--source", "analytic", "--steps", "100", "--levels", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let last: serde_json::Value = serde_json::from_str(stdout(&out).lines().last().unwrap()).unwrap();
    assert!((last["error_ratio"].as_f64().unwrap() - 4.0).abs() < 0.5);
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn exported_states_feed_imported_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("states.txt");
    let f = file.to_str().unwrap();
    let out = run(&["export-schedule", "--kind", "states", "--steps", "400", "--out", f]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(header(&file), "N 2 T 401");
    let direct = json(&run(&["compute", "--steps", "400"]));
    let imported = json(&run(&["compute", "--scenario", "imported-path", "--path-file", f]));
    assert_eq!(direct["gamma"], imported["gamma"]);
}

#[test]
fn transported_schedule_is_system_ancilla_sized() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("usa.txt");
    let out = run(&["export-schedule", "--steps", "50", "--out", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(header(&file), "N 4 T 51");
}

#[test]
fn degenerate_demo_reports_its_block() {
    let v = json(&run(&["compute", "--scenario", "degenerate-demo", "--steps", "500"]));
    assert_eq!(v["diagnostics"]["degenerate_blocks"].as_array().unwrap().len(), 1);
}

#[test]
fn custom_model_matches_builtin_dephasing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.toml");
    std::fs::write(
        &cfg,
        r#"scenario = "custom-lindblad"
tau = 3.0
steps = 4000

[model]
dim = 2
hamiltonian = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.5, 0.0]]]
rho0 = [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]]

[[model.jumps]]
rate = 0.1
operator = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
"#,
    )
    .unwrap();
    let custom = json(&run(&["compute", "--config", cfg.to_str().unwrap()]));
    let builtin =
        json(&run(&["compute", "--lambda", "0.2", "--theta0", "1.5707963267948966", "--tau", "3", "--steps", "4000"]));
    let (a, b) = (custom["gamma"].as_f64().unwrap(), builtin["gamma"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}
