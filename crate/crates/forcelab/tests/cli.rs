use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(file: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    root.join(file).display().to_string()
}

fn forcelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forcelab")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn force_on_the_fork_file() {
    let out = forcelab(&["force", "--poset", &data("fork.sexp"), "--formula", &data("sentences.sexp"), "--condition", "p"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "forcelab-report/1");
    assert_eq!(r["summary"]["fail"], 0);
    let claims: Vec<_> = r["rows"].as_array().unwrap().iter().map(|row| row["claim"].as_str().unwrap().to_string()).collect();
    assert_eq!(claims, ["truth-lemma/input", "audit/input", "atomic-etr/input"]);
    let notes: Vec<_> = r["notes"].as_array().unwrap().iter().filter_map(Value::as_str).collect();
    assert!(notes.contains(&"input: p forces (in-G (name ((() 0))))"));
    assert!(r["rows"].as_array().unwrap().iter().all(|row| row["runtime_ms"].is_null()));
}

#[test]
fn pool_file_feeds_the_truth_suite() {
    let out = forcelab(&["truth", "--pool", &data("pool.sexp"), "--stage", "2", "--A", "(hf (hf))", "--max-poset", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows[0]["claim"], "forcing-truth/V2/A=1");
    assert!(rows.iter().all(|row| row["status"] == "pass"));
}

#[test]
fn malformed_input_gives_no_report() {
    let out = forcelab(&["force", "--poset", &data("bad.sexp")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.sexp:1:1"), "{err}");
}

#[test]
fn zero_budgets_are_rejected() {
    let out = forcelab(&["force", "--poset", &data("fork.sexp"), "--budget-names", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn small_budgets_skip_rather_than_fail() {
    let out = forcelab(&["force", "--poset", &data("fork.sexp"), "--budget-names", "3"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["summary"]["skipped_budget"], 3);
    assert_eq!(r["rows"][0]["status"], "skipped-budget");
}

#[test]
fn same_seed_same_bytes() {
    let args = ["translate", "--poset", &data("fork.sexp"), "--seed", "11", "--translations", "50"];
    let a = forcelab(&args);
    let b = forcelab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = forcelab(&["translate", "--poset", &data("fork.sexp"), "--seed", "12", "--translations", "50"]);
    assert_ne!(report(&a)["config"], report(&other)["config"]);
}

#[test]
fn out_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = forcelab(&["game", "--trees", "100", "--clock", "1", "--timings", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1 + 2);
    assert!(rows.iter().all(|row| row["runtime_ms"].is_u64()));
}

#[test]
fn unknown_conditions_are_errors() {
    let out = forcelab(&["force", "--poset", &data("fork.sexp"), "--formula", &data("sentences.sexp"), "--condition", "zz"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}
