use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL_DYNAMICS: &str = r#"{"dynamics": {"seminorm_pairs": 20}}"#;

fn opalg(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_opalg"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = opalg(dir.path(), Some(SMALL_DYNAMICS), &["dynamics"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    for file in ["report.json", "decay.csv", "timing.json"] {
        assert!(dir.path().join("out").join(file).exists(), "{file} missing");
    }
    let r = report(dir.path());
    assert_eq!(r["tool"], "opalg");
    assert_eq!(r["summary"]["failed"], 0);
    assert_eq!(r["rng_streams"]["dynamics"], 4);
    let decay = std::fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    assert!(decay.starts_with("n,forward_norm,backward_norm,bound"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"dynamics": {"half_width": 12, "seminorm_pairs": 20}}"#;
    let out = opalg(dir.path(), Some(cfg), &["dynamics"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL dynamics/transitivity-witness"), "{stdout}");
    let r = report(dir.path());
    assert!(!r["summary"]["failing"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = opalg(dir.path(), Some(r#"{"dynamics": {"halfwidth": 12}}"#), &["dynamics"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("halfwidth"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_suite_list_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = opalg(dir.path(), Some(r#"{"suites": []}"#), &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suites"));
}

#[test]
fn every_invalid_field_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"tolerances": {"exact": -1.0}, "dynamics": {"delta": 0.0, "seminorm_pairs": 20}}"#;
    let out = opalg(dir.path(), Some(cfg), &["dynamics"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("tolerances.exact") && stderr.contains("dynamics.delta"), "{stderr}");
}

#[test]
fn non_positive_tol_scale_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = opalg(dir.path(), Some(SMALL_DYNAMICS), &["dynamics", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_seed_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert_eq!(opalg(a.path(), Some(SMALL_DYNAMICS), &["dynamics", "--seed", "11"]).status.code(), Some(0));
    assert_eq!(opalg(b.path(), Some(SMALL_DYNAMICS), &["dynamics", "--seed", "11"]).status.code(), Some(0));
    assert_eq!(opalg(c.path(), Some(SMALL_DYNAMICS), &["dynamics", "--seed", "12"]).status.code(), Some(0));
    for file in ["report.json", "decay.csv"] {
        let x = std::fs::read(a.path().join("out").join(file)).unwrap();
        let y = std::fs::read(b.path().join("out").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let (ra, rc) = (report(a.path()), report(c.path()));
    assert_eq!(ra["seed"], 11);
    assert_ne!(ra["config_digest"], rc["config_digest"]);
}

#[test]
fn tol_scale_enters_the_digest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    opalg(a.path(), Some(SMALL_DYNAMICS), &["dynamics"]);
    opalg(b.path(), Some(SMALL_DYNAMICS), &["dynamics", "--tol", "2"]);
    assert_ne!(report(a.path())["config_digest"], report(b.path())["config_digest"]);
}
