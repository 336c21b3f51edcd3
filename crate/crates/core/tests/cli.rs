use std::path::Path;
use std::process::{Command, Output};

use shapesmooth::io::{load_json, load_ppf};
use shapesmooth::{ModulusEstimate, PiecewisePoly, RateStudyReport, ShapeSpec, SmoothingReport};
use tempfile::TempDir;

fn shapesmooth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapesmooth"))
        .args(args)
        .env_remove("SHAPESMOOTH_THREADS")
        .output()
        .unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

const HAT: &str = r#"{"breakpoints": [-1, 0, 1], "pieces": [{"center": -1, "coeffs": [0]}, {"center": 0, "coeffs": [0, 1]}]}"#;
const TENT: &str = r#"{"breakpoints": [-1, 0, 1], "pieces": [{"center": -1, "coeffs": [0, 1]}, {"center": 0, "coeffs": [1, -1]}]}"#;

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn check_convex_input() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "hat.json", HAT);
    let out = shapesmooth(&["check", "--input", &input, "--q", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["holds"], true);
    assert_eq!(cert["q"], 2);
    assert_eq!(cert["smoothness_class"], 0);

    let tent = write(&dir, "tent.json", TENT);
    let out = shapesmooth(&["check", "--input", &tent, "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["holds"], false);
    assert_eq!(cert["witness"], 0.0);
}

#[test]
fn smooth_writes_certified_spline_and_report() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "hat.json", HAT);
    let (out_path, report_path) = (path(&dir, "out.json"), path(&dir, "report.json"));
    let args = [
        "smooth",
        "--q",
        "2",
        "--r",
        "1",
        "--input",
        &input,
        "--partition",
        "uniform:2",
        "--p",
        "1,2,inf",
        "--resolution",
        "32",
        "--out",
        &out_path,
        "--report",
        &report_path,
    ];
    let out = shapesmooth(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = load_ppf(Path::new(&out_path)).unwrap();
    assert!(s.is_q_monotone(&ShapeSpec::new(2).unwrap()).unwrap());
    assert!(s.smoothness_class(1e-9) >= 2);
    let report: SmoothingReport = load_json(Path::new(&report_path)).unwrap();
    assert!(report.shape_certified);
    assert_eq!(report.records.len(), 3);
    assert!(report.records.iter().all(|r| r.entries.len() == 3));

    let first = (std::fs::read(&out_path).unwrap(), std::fs::read(&report_path).unwrap());
    assert_eq!(shapesmooth(&args).status.code(), Some(0));
    assert_eq!(first, (std::fs::read(&out_path).unwrap(), std::fs::read(&report_path).unwrap()));
}

#[test]
fn smooth_on_a_given_remesh() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "hat.json", HAT);
    let bp: Vec<String> = (0..=1024).map(|i| format!("{}", -1.0 + i as f64 / 512.0)).collect();
    let remesh = write(&dir, "zt.json", &format!("{{\"breakpoints\": [{}]}}", bp.join(", ")));
    let out_path = path(&dir, "out.json");
    let out = shapesmooth(&[
        "smooth",
        "--q",
        "2",
        "--r",
        "1",
        "--input",
        &input,
        "--remesh",
        &format!("file:{remesh}"),
        "--max-refinements",
        "0",
        "--out",
        &out_path,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: PiecewisePoly = load_ppf(Path::new(&out_path)).unwrap();
    assert_eq!(s.n(), 1024);
}

#[test]
fn smooth_rejects_non_monotone_input_with_witness() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "tent.json", TENT);
    let out = shapesmooth(&["smooth", "--q", "1", "--r", "1", "--input", &input, "--out", &path(&dir, "out.json")]);
    assert_eq!(out.status.code(), Some(2));
    let diag = stderr_json(&out);
    assert!(!diag["message"].as_str().unwrap().is_empty());
    assert_eq!(diag["error"]["kind"], "not_in_shape_class");
    assert!(diag["error"]["witness"].as_f64().unwrap() >= 0.0);
    assert!(!Path::new(&path(&dir, "out.json")).exists());
}

#[test]
fn validation_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "hat.json", HAT);
    let out_path = path(&dir, "out.json");
    let missing = path(&dir, "missing.json");
    for args in [
        vec!["smooth", "--q", "2", "--r", "1", "--input", &missing, "--out", &out_path],
        vec!["smooth", "--q", "2", "--r", "0", "--input", &input, "--out", &out_path],
        vec!["smooth", "--q", "0", "--r", "1", "--input", &input, "--out", &out_path],
        vec![
            "smooth",
            "--q",
            "2",
            "--r",
            "1",
            "--input",
            &input,
            "--partition",
            "uniform:3",
            "--out",
            &out_path,
        ],
        vec!["smooth", "--q", "2", "--r", "1", "--input", &input, "--remesh", "sideways", "--out", &out_path],
        vec!["smooth", "--q", "2", "--r", "1", "--input", &input, "--p", "-1", "--out", &out_path],
        vec!["smooth", "--q", "2", "--r", "1", "--input", &input, "--out", "/nonexistent/dir/out.json"],
        vec!["smooth", "--q", "2"],
        vec!["frobnicate"],
    ] {
        let out = shapesmooth(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let bad = write(&dir, "bad.json", r#"{"breakpoints": [0, 0], "pieces": [{"center": 0, "coeffs": [1]}]}"#);
    assert_eq!(shapesmooth(&["check", "--input", &bad, "--q", "1"]).status.code(), Some(1));
    assert_eq!(shapesmooth(&["--help"]).status.code(), Some(0));

    let out = Command::new(env!("CARGO_BIN_EXE_shapesmooth"))
        .args(["check", "--input", &input, "--q", "2"])
        .env("SHAPESMOOTH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn modulus_command() {
    let dir = TempDir::new().unwrap();
    let square = write(&dir, "sq.json", r#"{"breakpoints": [-1, 1], "pieces": [{"center": 0, "coeffs": [0, 0, 1]}]}"#);
    let out = shapesmooth(&["modulus", "--input", &square, "--k", "1", "--t", "1", "--resolution", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let est: ModulusEstimate = serde_json::from_slice(&out.stdout).unwrap();
    assert!((est.value - 1.0).abs() < 1e-9);

    let out_path = path(&dir, "m.json");
    let out = shapesmooth(&["modulus", "--input", &square, "--k", "2", "--t", "0.5", "--ditzian-totik", "--out", &out_path]);
    assert_eq!(out.status.code(), Some(0));
    let est: ModulusEstimate = load_json(Path::new(&out_path)).unwrap();
    assert!((est.value - 0.5).abs() < 1e-6, "{}", est.value);
    assert_eq!(shapesmooth(&["modulus", "--input", &square, "--k", "1", "--t", "-1"]).status.code(), Some(1));
}

#[test]
fn rates_command_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "study.json",
        r#"{"target": {"name": "exp"}, "q": 1, "r": 1, "p": "inf", "kind": "uniform", "n_list": [8, 16, 32, 64], "seed": 1, "resolution": 32}"#,
    );
    let csv = path(&dir, "rates.csv");
    let out = shapesmooth(&["rates", "--config", &config, "--out", &csv]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,error,modulus,ratio"));
    assert_eq!(text.lines().count(), 5);
    let report: RateStudyReport = load_json(&dir.path().join("rates.json")).unwrap();
    assert!(report.fitted_order < -1.5);

    let bad = write(
        &dir,
        "bad.json",
        r#"{"target": {"name": "exp"}, "q": 1, "r": 1, "p": "inf", "kind": "uniform", "n_list": [8, 4], "seed": 1}"#,
    );
    assert_eq!(shapesmooth(&["rates", "--config", &bad, "--out", &csv]).status.code(), Some(1));
}

#[test]
fn demo_writes_the_worked_example() {
    let dir = TempDir::new().unwrap();
    let demo = path(&dir, "demo");
    let out = shapesmooth(&["demo", "--dir", &demo]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let d = Path::new(&demo);
    let c1 = load_ppf(&d.join("hat_c1.json")).unwrap();
    assert!((c1.eval(0.0) - 0.25).abs() < 1e-15);
    let s = load_ppf(&d.join("hat_smooth.json")).unwrap();
    assert!(s.is_q_monotone(&ShapeSpec::new(2).unwrap()).unwrap());
    assert!(s.smoothness_class(1e-9) >= 2);
    let report: SmoothingReport = load_json(&d.join("hat_report.json")).unwrap();
    assert!(report.shape_certified);
    assert_eq!(load_ppf(&d.join("hat.json")).unwrap().n(), 2);
}
