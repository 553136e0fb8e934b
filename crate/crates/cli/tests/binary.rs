use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler-forms"))
}

fn run_file(dir: &Path, name: &str, scenario: &str, extra: &[&str]) -> Output {
    let path = dir.join(name);
    std::fs::write(&path, scenario).unwrap();
    bin().arg("run").arg(&path).args(extra).output().unwrap()
}

#[test]
fn ricci_scenario_exits_zero_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run_file(
        dir.path(),
        "ricci.json",
        r#"{"metric":"euclidean","tasks":[{"kind":"check","params":{"check":"ricci-identity","samples":4}}]}"#,
        &["--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(report["tasks"][0]["summary"]["max_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn randers_adjointness_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_file(
        dir.path(),
        "adj.json",
        r#"{"metric":"randers-torus","tasks":[{"kind":"check","params":{"check":"adjointness","degree":1}}]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["tasks"][0]["summary"]["defect"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn violated_randers_invariant_is_reported_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_file(
        dir.path(),
        "bad.json",
        r#"{"metric":{"family":"randers","dim":2,"b":[0.8,0.8]},"tasks":[]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Randers invariant"));
    assert!(o.stdout.is_empty());
}

#[test]
fn failing_tolerance_gives_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_file(
        dir.path(),
        "strict.json",
        r#"{"metric":"euclidean","grid":"8x8:8",
            "tasks":[{"kind":"integrate","params":{"integrand":"volume","expected":1.0},"tolerance":1e-3}]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn one_shot_tensor_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = bin()
        .args(["tensor", "--metric", "randers-torus", "--at", "0.5,-1", "--name", "g", "--format", "csv", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("task,kind,quantity,x,y,component,value"));
    assert_eq!(lines.filter(|l| l.contains(",g,")).count(), 4);
}

#[test]
fn thread_cap_must_be_positive() {
    let o = bin().env("FINSLER_THREADS", "0").arg("list").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().env("FINSLER_THREADS", "1").arg("list").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let catalog: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(catalog["metrics"].as_array().unwrap().iter().any(|m| m["id"] == "randers-torus"));
}
