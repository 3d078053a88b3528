//! End-to-end runs of the `holomem` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use holomem_cli::commands::ReportDoc;
use holomem_cli::output::Table;
use serde_json::Value;
use tempfile::TempDir;

fn holomem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holomem")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn config(delta: f64, input: &str, n_max_total: usize, extra: &str) -> String {
    format!(
        r#"{{
  "model": {{"gN": 1.0, "delta": {delta}, "n_max_total": {n_max_total}, "omega_max": 100.0}},
  "schedule": {{"family": "cot-profile", "T_M_fraction": 0.5}},
  "input": {input}{extra}
}}"#
    )
}

fn run_in(dir: &TempDir, cfg: &str, sub: &str, extra_args: &[&str]) -> (Output, PathBuf) {
    let cfg_path = write_config(dir.path(), "cfg.json", cfg);
    let out = dir.path().join("out");
    let mut args = vec![sub, "--config", &cfg_path, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra_args);
    (holomem(&args), out)
}

fn report(out: &Path) -> ReportDoc {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    let j = t.column(name).unwrap();
    t.rows.iter().map(|r| r[j].parse().unwrap()).collect()
}

#[test]
fn vacuum_run_is_perfect() {
    let dir = TempDir::new().unwrap();
    let (out, dir_out) = run_in(&dir, &config(1e-2, "[[1.0, 0.0]]", 1, ""), "run", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir_out);
    assert!((r.fidelity_decoded - 1.0).abs() < 1e-6);
    assert!(dir_out.join("trajectory.csv").exists() && dir_out.join("phase.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = config(1e-1, "[[1.0, 0.0], [0.0, 1.0]]", 2, "");
    let (first, out) = run_in(&dir, &cfg, "run", &[]);
    assert_eq!(code(&first), 0);
    let files = ["report.json", "phase.json", "trajectory.csv"];
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
    let (second, _) = run_in(&dir, &cfg, "run", &[]);
    assert_eq!(code(&second), 0);
    for (f, b) in files.iter().zip(before) {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), b, "{f} changed between runs");
    }
}

#[test]
fn config_problems_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let unknown = config(1e-2, "[[1.0, 0.0]]", 1, r#", "colour": "blue""#);
    assert_eq!(code(&run_in(&dir, &unknown, "run", &[]).0), 2);
    let too_many = config(1e-2, "[[1.0, 0.0], [1.0, 0.0]]", 1, "");
    assert_eq!(code(&run_in(&dir, &too_many, "run", &[]).0), 2);
    let no_sweep = config(1e-2, "[[1.0, 0.0]]", 1, "");
    assert_eq!(code(&run_in(&dir, &no_sweep, "sweep", &[]).0), 2);
    assert_eq!(code(&holomem(&["run", "--config", "/nonexistent/cfg.json"])), 2);
    let out = dir.path().join("empty");
    assert_eq!(code(&holomem(&["plotdata", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn simulation_failure_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let strict = config(
        1e-1,
        "[[0.0, 0.0], [1.0, 0.0]]",
        2,
        r#", "integrator": {"tol": 1e-9, "samples": 11, "leakage_limit": 1e-12}"#,
    );
    let (out, _) = run_in(&dir, &strict, "run", &[]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tol_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = config(1e-1, "[[0.0, 0.0], [1.0, 0.0]]", 2, "");
    let (out, dir_out) = run_in(&dir, &cfg, "run", &["--tol", "1e-6"]);
    assert_eq!(code(&out), 0);
    let loose = report(&dir_out);
    assert_eq!(loose.config.integrator.tol, 1e-6);
    let (_, dir_out) = run_in(&dir, &cfg, "run", &[]);
    assert!(report(&dir_out).accepted_steps > loose.accepted_steps);
}

#[test]
fn delta_sweep_shows_adiabatic_scaling() {
    let dir = TempDir::new().unwrap();
    let cfg = config(1e-2, "[[1.0, 0.0], [1.0, 0.0]]", 2, r#", "sweep": {"axis": "delta", "values": [0.01, 0.001]}"#);
    let (out, dir_out) = run_in(&dir, &cfg, "sweep", &["--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&dir_out.join("sweep.csv")).unwrap();
    assert_eq!(t.header, holomem_cli::commands::SWEEP_COLUMNS);
    let f = column(&t, "fidelity_decoded");
    assert_eq!(f.len(), 2);
    assert!(1.0 - f[1] < 1.0 - f[0], "{f:?}");
}

#[test]
fn empty_axis_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = config(1e-2, "[[1.0, 0.0]]", 1, r#", "sweep": {"axis": "delta", "values": []}"#);
    let (out, dir_out) = run_in(&dir, &cfg, "sweep", &[]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir_out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn input_sweep_shares_gamma_and_is_order_stable() {
    let dir = TempDir::new().unwrap();
    let sweep = r#", "sweep": {"axis": "input", "values": [[[1, 0], [1, 0], [1, 0]], [[1, 0], [0, 1]], [[0, 0], [0, 0], [1, 0]]]}"#;
    let cfg = config(1e-1, "[[1.0, 0.0]]", 3, sweep);
    let (serial, dir_out) = run_in(&dir, &cfg, "sweep", &["--jobs", "1"]);
    assert_eq!(code(&serial), 0, "{}", String::from_utf8_lossy(&serial.stderr));
    let csv_serial = std::fs::read(dir_out.join("sweep.csv")).unwrap();
    let (parallel, _) = run_in(&dir, &cfg, "sweep", &["--jobs", "3"]);
    assert_eq!(code(&parallel), 0);
    assert_eq!(std::fs::read(dir_out.join("sweep.csv")).unwrap(), csv_serial);

    let t = Table::read(&dir_out.join("sweep.csv")).unwrap();
    let j = t.column("gamma_used").unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.rows.iter().all(|r| r[j] == t.rows[0][j]));
    assert_eq!(column(&t, "index"), vec![0.0, 1.0, 2.0]);
}

#[test]
fn failed_points_are_recorded_in_row() {
    let dir = TempDir::new().unwrap();
    let sweep = r#", "sweep": {"axis": "family", "values": ["linear-theta", "zigzag", "cot-profile"]}"#;
    let cfg = config(1e-1, "[[1.0, 0.0], [1.0, 0.0]]", 2, sweep);
    let (out, dir_out) = run_in(&dir, &cfg, "sweep", &[]);
    assert_eq!(code(&out), 3);
    let t = Table::read(&dir_out.join("sweep.csv")).unwrap();
    let err = t.column("error").unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.rows[0][err].is_empty() && t.rows[2][err].is_empty());
    assert!(t.rows[1][err].contains("zigzag"));
    assert!(column(&t, "fidelity_decoded")[1].is_nan());
}

#[test]
fn plot_data_from_a_run() {
    let dir = TempDir::new().unwrap();
    let (out, dir_out) = run_in(&dir, &config(1e-2, "[[0.0, 0.0], [1.0, 0.0]]", 2, ""), "run", &[]);
    assert_eq!(code(&out), 0);
    let plot = holomem(&["plotdata", "--out", dir_out.to_str().unwrap()]);
    assert_eq!(code(&plot), 0, "{}", String::from_utf8_lossy(&plot.stderr));

    let path = Table::read(&dir_out.join("path.csv")).unwrap();
    let (t, r1, r2, r3) = (column(&path, "t"), column(&path, "R1"), column(&path, "R2"), column(&path, "R3"));
    for j in 0..t.len() {
        assert!((r1[j] * r1[j] + r2[j] * r2[j] - 1.0).abs() < 1e-12);
    }
    let t_m = report(&dir_out).t_m;
    let row = t.iter().position(|&x| x == t_m).expect("storage row");
    assert_eq!(r3[row], 0.0);

    let integrand = Table::read(&dir_out.join("integrand.csv")).unwrap();
    let (phi, f) = (column(&integrand, "phi"), column(&integrand, "integrand"));
    let trapezoid: f64 = (1..phi.len()).map(|j| 0.5 * (phi[j] - phi[j - 1]) * (f[j] + f[j - 1])).sum();
    assert!((trapezoid + std::f64::consts::PI).abs() < 1e-4, "{trapezoid}");

    let diagnostics = Table::read(&dir_out.join("diagnostics.csv")).unwrap();
    assert_eq!(diagnostics.header, ["t", "leakage", "q1", "q2"]);
    let trajectory = Table::read(&dir_out.join("trajectory.csv")).unwrap();
    assert_eq!(diagnostics.rows.len(), trajectory.rows.len());
}

#[test]
fn phase_is_geometry_only() {
    let dir = TempDir::new().unwrap();
    let (out, dir_out) = run_in(&dir, &config(1e-3, "[[1.0, 0.0]]", 1, ""), "phase", &[]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir_out.join("phase.json")).unwrap()).unwrap();
    assert!((doc["gamma_loop"].as_f64().unwrap() - doc["gamma_time"].as_f64().unwrap()).abs() < 1e-8);
    assert!((doc["gamma_loop_uncapped"].as_f64().unwrap() + std::f64::consts::PI).abs() < 1e-9);
    assert_eq!(doc["gamma_evolved"], Value::Array(vec![]));
    assert!(!dir_out.join("report.json").exists());
}

#[test]
fn validate_writes_bosonization_table() {
    let repo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = TempDir::new().unwrap();
    let cfg = repo.join("configs/validate.json");
    let out = holomem(&["validate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&dir.path().join("bosonization.csv")).unwrap();
    let (n, err) = (column(&t, "n"), column(&t, "error"));
    let two: Vec<f64> = n.iter().zip(&err).filter(|(n, _)| **n == 2.0).map(|(_, e)| *e).collect();
    assert_eq!(two.len(), 4);
    assert!(two.windows(2).all(|w| w[1] < w[0]), "{two:?}");
    assert!(n.iter().zip(&err).filter(|(n, _)| **n == 1.0).all(|(_, e)| *e < 1e-12));
    let dark = Table::read(&dir.path().join("darkstates.csv")).unwrap();
    assert_eq!(dark.rows.len(), 50);
    assert!(column(&dark, "residual").iter().all(|&r| r < 1e-10));
}

#[test]
fn shipped_cot_config_reports_minus_pi() {
    let repo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = TempDir::new().unwrap();
    let cfg = repo.join("configs/cot_profile.json");
    let out = holomem(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert!((r.gamma_loop + std::f64::consts::PI).abs() < 1e-6);
    assert!(r.fidelity_decoded >= 0.99 && r.fidelity_raw < r.fidelity_decoded);
}
