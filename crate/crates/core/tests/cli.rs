use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangent-monad"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn every_example_passes_check_algebra() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["cylinder", "torus", "radial", "rotation", "free", "trivial"] {
        let out = bin(&["examples", name, "--out", "spec.json"], dir.path());
        assert!(out.status.success(), "{name}");
        let out = bin(&["check-algebra", "spec.json", "--samples", "60"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        let doc = json(&out);
        assert_eq!(doc["passed"], true);
        assert_eq!(doc["config"]["samples"], 60);
        assert_eq!(doc["config"]["seed"], 42);
    }
}

#[test]
fn failing_algebra_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("id.json"), r#"{"dim": 1, "exprs": ["x1 + v1"], "domain": {"min": [-1], "max": [1]}}"#).unwrap();
    let out = bin(&["check-algebra", "id.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn malformed_expression_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"dim": 1, "exprs": ["x1 + * v1"], "domain": {"min": [-1], "max": [1]}}"#).unwrap();
    let out = bin(&["check-algebra", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position 5"), "{err}");
    assert!(err.contains('^'));
    assert_eq!(bin(&["check-algebra", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(bin(&["no-such-command"], dir.path()).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["examples", "rotation", "--out", "rot.json"], dir.path());
    let a = bin(&["check-algebra", "rot.json", "--samples", "40", "--seed", "9"], dir.path());
    let b = bin(&["check-algebra", "rot.json", "--samples", "40", "--seed", "9"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&["check-algebra", "rot.json", "--samples", "40", "--seed", "10"], dir.path());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn hopf_classify_emits_the_t_family() {
    let out = bin(&["hopf", "classify", "--a", "0", "--b", "1"], std::path::Path::new("."));
    assert!(out.status.success());
    let fam = &json(&out)["result"]["families"][0];
    assert_eq!(fam["kind"], "nilpotent");
    assert_eq!(fam["parameter"], "t");
}

#[test]
fn leaf_tracing_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["examples", "cylinder", "--out", "cyl.json"], dir.path());
    let out = bin(&["trace-leaf", "cyl.json", "--at", "-0.5,1", "--count", "30", "--csv", "leaf.csv", "--svg", "leaf.svg"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("leaf.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("v1,v2,y1,y2"));
    assert_eq!(csv.lines().count(), 31);
    assert!(fs::read_to_string(dir.path().join("leaf.svg")).unwrap().starts_with("<svg"));
    assert_eq!(json(&out)["result"]["leaf_dimension"], 1);
}

#[test]
fn lift_and_holonomy_on_the_rotation() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["examples", "rotation", "--out", "rot.json"], dir.path());
    let out = bin(&["lift-path", "rot.json", "--at", "1,0", "--path", "cos(t)", "--path", "-sin(t)"], dir.path());
    assert!(out.status.success());
    assert!(json(&out)["result"]["endpoint_error"].as_f64().unwrap() < 1e-6);
    let out = bin(&["holonomy", "rot.json", "--at", "1,0", "--loop", "cos(2*pi*t)", "--loop", "sin(2*pi*t)"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out)["result"]["eigenvalue_one"], true);
}

#[test]
fn kahler_subcommands() {
    let here = std::path::Path::new(".");
    let out = bin(&["kahler", "verify", "--vars", "3"], here);
    assert!(out.status.success());
    let out = bin(&["kahler", "coalgebra", "--h", "X + X^2*dX", "--b", "0"], here);
    assert_eq!(out.status.code(), Some(1));
    let out = bin(&["kahler", "coalgebra", "--h", "X + dY"], here);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_monad_float_backend() {
    let out = bin(&["verify-monad", "--dim", "2", "--samples", "30", "--backend", "float"], std::path::Path::new("."));
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["config"]["backend"], "float");
    assert_eq!(doc["result"][0]["checks"][0]["backend"], "float");
}
