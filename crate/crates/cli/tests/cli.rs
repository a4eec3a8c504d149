use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lgem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgem"))
        .args(args)
        .env_remove("LGEM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const COARSE: &str = r#"{"nz": 128, "dt": 0.02}"#;

#[test]
fn simulate_fig2_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = lgem(&[
        "simulate",
        "--preset",
        "fig2",
        "--out",
        out.to_str().unwrap(),
        "--snapshot-stride",
        "200",
    ]);
    let summary = stdout_json(&o);
    let w = &summary["window_energies"];
    assert!(w["E1"].as_f64().unwrap() >= 0.0);
    assert!(w["E2"].as_f64().unwrap() > 0.0);
    for f in [
        "config.json",
        "boundary.csv",
        "snapshots.csv",
        "kspectra.csv",
        "window_energies.json",
        "record.bin",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let hash = summary["config_hash"].as_str().unwrap();
    let csv = std::fs::read_to_string(out.join("boundary.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# config_hash={hash}"));
    assert!(o.stdout.iter().all(u8::is_ascii));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", COARSE);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lgem(&[
            "simulate",
            "--preset",
            "freq-domain",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--snapshot-stride",
            "50",
        ]);
        assert!(o.status.success());
        (o.stdout, out)
    };
    let (s1, d1) = run("a");
    let (s2, d2) = run("b");
    assert_eq!(s1, s2);
    for f in ["boundary.csv", "snapshots.csv", "kspectra.csv", "record.bin", "config.json"] {
        assert_eq!(
            std::fs::read(d1.join(f)).unwrap(),
            std::fs::read(d2.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn full_config_round_trips_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", COARSE);
    let first = dir.path().join("first");
    let o = lgem(&[
        "simulate",
        "--preset",
        "freq-domain",
        "--config",
        &cfg,
        "--out",
        first.to_str().unwrap(),
    ]);
    let a = stdout_json(&o);
    let second = dir.path().join("second");
    let o = lgem(&[
        "simulate",
        "--config",
        first.join("config.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    let b = stdout_json(&o);
    assert_eq!(a, b);
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", COARSE);
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_lgem"))
        .args(["simulate", "--preset", "freq-domain", "--config", &cfg])
        .env("LGEM_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("boundary.csv").is_file());
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    let garbage = write(dir.path(), "g.json", "{ not json");
    let partial = write(dir.path(), "p.json", r#"{"grid": {"nz": 10}}"#);
    let unknown = write(dir.path(), "u.json", r#"{"no_such_key": 1}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", &garbage, "--out", out],
        vec!["simulate", "--config", &partial, "--out", out],
        vec!["simulate", "--preset", "fig2", "--config", &unknown, "--out", out],
        vec!["simulate", "--preset", "nope", "--out", out],
        vec!["simulate", "--out", out],
        vec!["sweep", "--preset", "freq-domain", "--sweep", "phase", "--range", "0:1", "--out", out],
        vec!["sweep", "--preset", "freq-domain", "--sweep", "mismatch", "--range", "0:2:3", "--out", out],
        vec!["sweep", "--preset", "freq-domain", "--sweep", "phase", "--workers", "0", "--out", out],
    ];
    for args in cases {
        let o = lgem(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn separation_guard_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", r#"{"separation_mhz": 0.5}"#);
    let o = lgem(&["simulate", "--preset", "freq-domain", "--config", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("separation"));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = write(dir.path(), "o.json", COARSE);
    let o = lgem(&[
        "simulate",
        "--preset",
        "freq-domain",
        "--config",
        &cfg,
        "--dry-run",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = stdout_json(&o);
    assert_eq!(summary["valid"], true);
    assert_eq!(summary["nz"], 128);
    assert!(!out.exists());
}

#[test]
fn dry_run_reports_step_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", r#"{"dt": 0.5}"#);
    let o = lgem(&["simulate", "--preset", "freq-domain", "--config", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["valid"], false);
    assert!(!summary["violations"].as_array().unwrap().is_empty());
}

#[test]
fn phase_sweep_reports_both_ports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", COARSE);
    let out = dir.path().join("phase");
    let o = lgem(&[
        "sweep",
        "--preset",
        "freq-domain",
        "--config",
        &cfg,
        "--sweep",
        "phase",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = stdout_json(&o);
    assert_eq!(s["phases"].as_array().unwrap().len(), 8);
    for port in ["E1", "E2"] {
        let v = s["visibility"][port].as_f64().unwrap();
        assert!(v > 0.5 && v < 1.05, "{port} visibility {v}");
        assert!(s["phi0"][port].is_number());
        assert!(out.join(format!("fringe_{port}.csv")).is_file());
        let side: Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("fringe_{port}.json"))).unwrap())
                .unwrap();
        assert_eq!(side["visibility"], s["visibility"][port]);
    }
    let csv = std::fs::read_to_string(out.join("fringe_E2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 8);
}

#[test]
fn coupling_sweep_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "o.json",
        r#"{"nz": 128, "dt": 0.02, "balance": "oracle", "tau1": 8, "tau2": 8}"#,
    );
    let out = dir.path().join("coupling");
    let o = lgem(&[
        "sweep",
        "--preset",
        "time-domain",
        "--config",
        &cfg,
        "--sweep",
        "coupling",
        "--range",
        "1:1:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = stdout_json(&o);
    let points = s["points"].as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0]["x"], 1.0);
    assert!(points[0]["e1"].as_f64().unwrap() > 0.9);
    let csv = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("relative_power,visibility_E1,visibility_E2"));
}

#[test]
fn mismatch_sweep_includes_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "o.json", COARSE);
    let out = dir.path().join("mm");
    let o = lgem(&[
        "sweep",
        "--preset",
        "freq-domain",
        "--config",
        &cfg,
        "--sweep",
        "mismatch",
        "--range",
        "0:1:3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let s = stdout_json(&o);
    let points = s["points"].as_array().unwrap();
    let e2: Vec<f64> = points.iter().map(|p| p["e2"].as_f64().unwrap()).collect();
    assert_eq!(points[0]["x"], 0.0);
    assert!(e2[0].abs() < 1e-3, "no overlap gives no fringe: {e2:?}");
    assert!(e2[0] < e2[1] && e2[1] < e2[2], "{e2:?}");
}

#[test]
fn oracle_write_read_example() {
    let dir = tempfile::tempdir().unwrap();
    let ev = write(
        dir.path(),
        "ev.json",
        r#"{"inputs": [[1, 0]],
            "events": [{"kind": "write", "beta": 0.25}, {"kind": "read", "beta": 0.25}]}"#,
    );
    let s = stdout_json(&lgem(&["oracle", &ev]));
    let e = s["echo_energies"][0].as_f64().unwrap();
    assert!((e - 0.6274).abs() < 1e-4, "{e}");
    assert!((s["total_energy"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(s.get("balance").is_none());
}

#[test]
fn oracle_balance_and_no_solution() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.json",
        r#"{"inputs": [], "events": [], "balance": {"r1": 0.8, "ep": 1, "es": 1}}"#,
    );
    let s = stdout_json(&lgem(&["oracle", &ok]));
    let beta = s["balance"]["beta"].as_f64().unwrap();
    let r = 1.0 - (-2.0 * std::f64::consts::PI * beta).exp();
    assert!((0.8 * r - (1.0 - r)).abs() < 1e-10);

    let none = write(
        dir.path(),
        "none.json",
        r#"{"inputs": [], "events": [], "balance": {"r1": 0.8, "ep": 1, "es": 0}}"#,
    );
    let s = stdout_json(&lgem(&["oracle", &none]));
    assert!(s["balance"]["beta"].is_null());
    assert!(s["balance"]["no_solution"].is_string());

    let bad = write(dir.path(), "bad.json", r#"{"inputs": [[1, 0]], "events": []}"#);
    assert_eq!(lgem(&["oracle", &bad]).status.code(), Some(2));
}
