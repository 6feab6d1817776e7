use std::process::{Command, Output};

use serde_json::Value;

fn coclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coclass")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = coclass(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(coclass(&["cohomology", "--scenario", "d8_gaussian", "--n", "2"]).status.code(), Some(2));
    assert_eq!(coclass(&["cohomology", "--scenario", "d8_gaussian", "--n", "2", "--degree", "9"]).status.code(), Some(2));
    assert_eq!(coclass(&["orbits", "--scenario", "nope", "--n", "1"]).status.code(), Some(2));
    assert_eq!(coclass(&["run-all", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn h2_of_the_gaussian_quotient_at_level_two() {
    let out = coclass(&["cohomology", "--scenario", "d8_gaussian", "--n", "2", "--degree", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["invariants"], serde_json::json!(["2", "2", "2"]));
    assert_eq!(v["level"], "2");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["orbits", "--scenario", "c2_negation", "--n", "3"];
    let a = coclass(&args);
    let b = coclass(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn precision_override_is_rechecked() {
    let out = coclass(&["--precision", "12", "cohomology", "--scenario", "c2_negation", "--n", "3", "--degree", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["precision"], "12");
    assert_eq!(v["recheck_precision"], "14");
}

#[test]
fn counterexample_is_found() {
    let out = coclass(&["verify-counterexample"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["ok"], true);
    assert!(!v["witness"].is_null());
}

#[test]
fn non_qualifying_level_is_a_precondition_error() {
    let out = coclass(&["correspondence", "--scenario", "dihedral_mainline", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert!(v["precondition"].is_string());
}

#[test]
fn qualifying_level_corresponds() {
    let out = coclass(&["correspondence", "--scenario", "c2_negation", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["ok"], true);
}

#[test]
fn extend_reads_a_class_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("class.json");
    std::fs::write(&file, r#"{"level": "3", "class": ["1"]}"#).unwrap();
    let out = coclass(&["extend", "--scenario", "c2_negation", "--cocycle", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["order"], "16");
    assert_eq!(v["name"], "quaternion");

    std::fs::write(&file, r#"{"level": 3, "class": [1], "cocycle": [0]}"#).unwrap();
    let out = coclass(&["extend", "--scenario", "c2_negation", "--cocycle", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn branch_writes_dot_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("b.dot");
    let report = dir.path().join("b.json");
    let out = coclass(&[
        "branch",
        "--scenario",
        "dihedral_mainline",
        "--i",
        "6",
        "--k",
        "1",
        "--shift",
        "--dot",
        dot.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("semidihedral"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["ok"], true);
}

#[test]
fn shift_below_the_bound_is_refused() {
    let out = coclass(&["branch", "--scenario", "dihedral_mainline", "--i", "5", "--k", "1", "--shift"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_all_does_not_depend_on_jobs() {
    let one = coclass(&["run-all", "--jobs", "1"]);
    let four = coclass(&["run-all", "--jobs", "4"]);
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(json(&one)["ok"], true);
}
