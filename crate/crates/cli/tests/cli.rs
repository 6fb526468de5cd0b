use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mhd_enstrophy::ensemble::EnsembleReport;

fn mhdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdlab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn selftest_passes() {
    let o = mhdlab(&["selftest"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{out}");
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 15);
    assert!(!out.contains("FAIL"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&mhdlab(&[])), 1);
    assert_eq!(code(&mhdlab(&["simulate"])), 1);
    assert_eq!(code(&mhdlab(&["frobnicate"])), 1);
    assert_eq!(code(&mhdlab(&["--help"])), 0);
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let report = dir.path().join("r.json");
    let o = mhdlab(&["analyze", "--config", s(&smoke_config()), "--snapshots", s(&empty), "--out", s(&report)]);
    assert_eq!(code(&o), 2);
    assert!(!report.exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[analysis]\ndelta = 0.5\n").unwrap();
    assert_eq!(code(&mhdlab(&["verify-cutoffs", "--config", s(&bad)])), 2);
    assert_eq!(code(&mhdlab(&["verify-cutoffs", "--config", s(&dir.path().join("missing.toml"))])), 2);
}

#[test]
fn unstable_time_step_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[grid]\nn = 16\n[solver]\nviscosity = 0.0\nresistivity = 0.0\ndt = 1.0\nt_end = 4.0\n\
         snapshot_stride = 1\ndealias_fraction = 0.6666666666666666\n",
    )
    .unwrap();
    let o = mhdlab(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("snaps"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn cover_files_round_trip_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[covers]\ncovers_per_scale = 2\nsample_density = 4\n").unwrap();
    let covers = dir.path().join("covers.json");
    assert_eq!(code(&mhdlab(&["cover", "gen", "--config", s(&cfg), "--out", s(&covers)])), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&covers).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
    assert_eq!(code(&mhdlab(&["cover", "verify", "--config", s(&cfg), "--cover", s(&covers)])), 0);

    let mut thin = v[2].clone();
    thin["centers"] = serde_json::json!([[0.0, 0.0, 0.0]]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, thin.to_string()).unwrap();
    assert_eq!(code(&mhdlab(&["cover", "verify", "--config", s(&cfg), "--cover", s(&bad)])), 2);
}

#[test]
fn cutoff_bounds_pass_for_configured_covers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[analysis]\nscales = [0.7853981633974483, 0.39269908169872414]\n").unwrap();
    let o = mhdlab(&["verify-cutoffs", "--config", s(&cfg), "--samples", "300"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let all = v.as_array().unwrap();
    assert!(all.len() > 10);
    assert!(all.iter().all(|c| c["passed"] == true));
    assert!(all.iter().any(|c| c["bounds"]["kind"] == "boundary"));
}

fn pipeline(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    let snaps = dir.join("snaps");
    let report = dir.join("report.json");
    let o = mhdlab(&["simulate", "--config", s(&smoke_config()), "--out", s(&snaps)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = mhdlab(&["analyze", "--config", s(&smoke_config()), "--snapshots", s(&snaps), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (std::fs::read(dir.join("report.csv")).unwrap(), std::fs::read(report).unwrap())
}

#[test]
fn simulate_then_analyze_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (csv1, json1) = pipeline(a.path());
    let (csv2, json2) = pipeline(b.path());
    assert_eq!(csv1, csv2);
    assert_eq!(json1, json2);

    let rep = EnsembleReport::from_json(std::str::from_utf8(&json1).unwrap()).unwrap();
    assert_eq!(rep.scales.len(), 3);
    assert!(rep.integral.p0 > 0.0 && rep.integral.sigma0 > 0.0);
    assert!(rep.assumptions.is_some());
    assert!(rep.locality.identity_ok);
    assert_eq!(rep.admissible_range[0], rep.integral.sigma0 / rep.params.beta);
    assert!(rep.scales.iter().all(|e| e.n.len() == 8));
    assert_eq!(String::from_utf8(csv1).unwrap().lines().count(), 4);

    let v = schema();
    let value: serde_json::Value = serde_json::from_slice(&json1).unwrap();
    let errors: Vec<String> = v.iter_errors(&value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    let mut extra = value.clone();
    extra["unexpected"] = serde_json::json!(1);
    assert!(!v.is_valid(&extra));
    let mut missing = value;
    missing["integral"].as_object_mut().unwrap().remove("sigma0");
    assert!(!v.is_valid(&missing));
}
