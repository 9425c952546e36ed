//! End-to-end tests of the `qnvp` binary: exit codes, file formats, and
//! determinism, all at small grid sizes so the whole file stays fast.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qnvp_cli::output::read_dump;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qnvp"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn config_errors_exit_with_the_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "odd.json",
        r#"{
          "grid": {"nq": 33, "nv": 32},
          "params": {"epsilon": 0.5, "delta": 0.05},
          "run": {"dt": 0.01, "t_final": 0.1, "model": "qnvp"}
        }"#,
    );
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.nq must be even"), "stderr: {err}");

    // a missing file also names its path
    let out = bin()
        .args(["run", "--config", dir.path().join("no.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.json"));
}

#[test]
fn run_writes_deterministic_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "langmuir.json",
        r#"{
          "grid": {"nq": 16, "nv": 8},
          "params": {"epsilon": 0.5, "delta": 0.05},
          "initial": {"family": "single_mode", "amplitude": 1e-3},
          "run": {"dt": 0.01, "t_final": 0.5, "sample_stride": 5, "model": "langmuir"}
        }"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
        "--deterministic",
    ]);
    run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--deterministic",
    ]);
    let text = fs::read_to_string(out_a.join("diagnostics.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# qnvp-lab v"));
    assert_eq!(
        lines[1],
        "t,H,mass,div_norm,ntilde_k10_amp,phi_k10_amp,min_rho"
    );
    let data_rows = lines
        .iter()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .count();
    assert_eq!(data_rows, 11); // t = 0 plus ten strided samples
    assert_eq!(
        fs::read(out_a.join("diagnostics.csv")).unwrap(),
        fs::read(out_b.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn field_dumps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "qnvp.json",
        r#"{
          "grid": {"nq": 8, "nv": 32},
          "params": {"epsilon": 0.7, "delta": 0.1},
          "initial": {"family": "shear_flow", "amplitude": 0.2},
          "run": {"dt": 0.02, "t_final": 0.2, "model": "qnvp"},
          "output": {"dump_stride": 5}
        }"#,
    );
    let out_dir = dir.path().join("out");
    run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    for step in ["000000", "000005", "000010"] {
        let pi_x = read_dump(&out_dir.join(format!("pi_x_{step}.qnvpf"))).unwrap();
        assert_eq!(pi_x.dims, vec![8, 8]);
        assert!(pi_x.data.iter().all(|v| v.is_finite()));
        let rho = read_dump(&out_dir.join(format!("rho_{step}.qnvpf"))).unwrap();
        assert_eq!(rho.dims, vec![8, 8, 32, 32]);
        assert_eq!(rho.data.len(), 8 * 8 * 32 * 32);
    }
    // the shear momentum dump reproduces the configured band
    let pi_x0 = read_dump(&out_dir.join("pi_x_000000.qnvpf")).unwrap();
    let max = pi_x0.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((max - 0.2).abs() < 0.2 * 0.05, "band amplitude {max}");
}

#[test]
fn divergence_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "blowup.json",
        r#"{
          "grid": {"nq": 16, "nv": 8},
          "params": {"epsilon": 0.5, "delta": 0.005},
          "initial": {"family": "single_mode", "amplitude": 1e-3},
          "run": {"dt": 2.0, "t_final": 100.0, "model": "langmuir"}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divergence"));
    // the partial series is still on disk
    assert!(out_dir.join("diagnostics.csv").exists());
}

#[test]
fn compare_writes_difference_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "compare.json",
        r#"{
          "grid": {"nq": 8, "nv": 32},
          "params": {"epsilon": 0.5, "delta": 0.05},
          "initial": {"family": "shear_flow", "amplitude": 0.1},
          "run": {"dt": 0.02, "t_final": 0.2, "model": "vp_fastslow"}
        }"#,
    );
    let out_dir = dir.path().join("out");
    run_ok(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "t,pi_diff,rho_diff,n_diff");
    let rows: Vec<&str> = lines
        .iter()
        .skip(2)
        .filter(|l| !l.starts_with('#'))
        .copied()
        .collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        for v in row.split(',') {
            let x: f64 = v.parse().unwrap();
            assert!(x.is_finite());
        }
    }
}

#[test]
fn sweep_fits_the_configured_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
          "grid": {"nq": 8, "nv": 32},
          "params": {"epsilon": 0.5, "delta": 0.05},
          "initial": {"family": "shear_flow", "amplitude": 0.1},
          "run": {"dt": 0.02, "t_final": 0.2, "model": "vp_fastslow"},
          "sweep": {"deltas": [0.04, 0.08], "measure": "pi_difference"}
        }"#,
    );
    let out_dir = dir.path().join("out");
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sweep_result.json")).unwrap())
            .unwrap();
    assert_eq!(report["measure"], "pi_difference");
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
    assert!(report["fit"]["slope"].as_f64().unwrap().is_finite());
    // per-delta difference series were written alongside
    assert!(out_dir.join("compare_delta_4e_2.csv").exists());
    assert!(out_dir.join("compare_delta_8e_2.csv").exists());
}

#[test]
fn verify_runs_a_single_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "verify.json",
        r#"{
          "grid": {"nq": 16, "nv": 32},
          "params": {"epsilon": 0.7, "delta": 0.1},
          "run": {"dt": 0.01, "t_final": 0.1, "model": "qnvp"}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_ok(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--check",
        "collectivization",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "stdout: {stdout}");
    assert!(stdout.contains("collectivization"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_pass"], true);
    assert!(!report["checks"].as_array().unwrap().is_empty());

    // unknown names are a usage error, not a silent no-op
    let out = bin()
        .args([
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--check",
            "nonsense",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn corrupted_bracket_sign_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "verify.json",
        r#"{
          "grid": {"nq": 16, "nv": 32},
          "params": {"epsilon": 0.7, "delta": 0.1},
          "run": {"dt": 0.01, "t_final": 0.1, "model": "qnvp"}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--check",
            "bracket_routes",
            "--corrupt-bracket-sign",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_pass"], false);
    let failing: Vec<&serde_json::Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert!(!failing.is_empty());
    assert!(failing
        .iter()
        .any(|c| c["name"].as_str().unwrap().contains("antisymmetry")));
}
