use std::process::{Command, Output};

use serde_json::Value;

fn pullback(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pullback")).args(args).output().unwrap()
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# Chebyshev fixed point\nmap = poly:d=2,c=-2\nz0 = 2\nn = 50\n").unwrap();
    let out = pullback(&["orbit", "--config", cfg.to_str().unwrap(), "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 8);
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "map = poly:d=2,c=-2\nzz0 = 2\n").unwrap();
    let out = pullback(&["orbit", "--config", cfg.to_str().unwrap(), "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz0"));
}

#[test]
fn telescope_writes_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let tail = dir.path().join("tail.json");
    let poly = dir.path().join("poly.json");
    let csv = dir.path().join("tau.csv");
    let out = pullback(&[
        "telescope",
        "--map",
        "poly:d=2,c=0.25",
        "--z0",
        "0.3+0.02i",
        "--n",
        "12",
        "--max-period",
        "6",
        "--tail-json",
        tail.to_str().unwrap(),
        "--polylines",
        poly.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("i,tau_i,m_i"));
    assert_eq!(text.lines().count(), 14);
    let tail: Value = serde_json::from_slice(&std::fs::read(&tail).unwrap()).unwrap();
    assert!(tail["max_m"].as_f64().unwrap() > 0.0);
    let poly: Value = serde_json::from_slice(&std::fs::read(&poly).unwrap()).unwrap();
    assert!(poly.as_array().is_some_and(|a| a.len() == 13));
}

#[test]
fn cycles_json_reports_m_f() {
    let out = pullback(&["cycles", "--map", "poly:d=2,c=-2", "--max-period", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["M_f"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(doc["M_f_provenance"], "UpperBound");
}

#[test]
fn sweep_basin_grid_and_series() {
    let out = pullback(&[
        "sweep",
        "--map",
        "poly:d=2,c=0",
        "--c-re-range",
        "-0.5:0.5",
        "--c-im-range",
        "0:0",
        "--c-steps",
        "3",
        "--jobs",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "c_re,c_im,basin,period,multiplier_abs");
    // every c on this segment except 0.5 has an attracting fixed point
    assert_eq!(lines.len(), 10);
    let row = |k: usize| -> Vec<String> { lines[k].split(',').map(str::to_string).collect() };
    assert_eq!(row(1)[0].parse::<f64>().unwrap(), -0.5);
    assert_eq!(&row(1)[2..4], ["1", "1"]);
    assert!((row(1)[4].parse::<f64>().unwrap() - (3f64.sqrt() - 1.0)).abs() < 1e-8);
    assert_eq!(row(3)[0].parse::<f64>().unwrap(), 0.5);
    assert_eq!(row(3)[2], "0");

    let out = pullback(&["sweep", "--map", "poly:d=2,c=-2", "--z0", "2", "--n-series", "5,10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);

    let out = pullback(&["sweep", "--map", "poly:d=2,c=-2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn escaping_orbit_is_hypothesis_failure() {
    let out = pullback(&["orbit", "--map", "poly:d=2,c=1", "--z0", "3", "--n", "40"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_refuses_basin_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = pullback(&["verify", "--map", "poly:d=2,c=-0.5", "--z0", "0.1", "--n", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["status"], "hypothesis_failure");
    assert_eq!(doc["cycle"]["period"], 1);
}
