use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn goldmankit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goldmankit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_tmp(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn casimir_g2_passes() {
    let o = goldmankit(&["verify", "casimir", "--group", "g2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("[PASS] casimir-closed-form"));
}

#[test]
fn bracket_sp2_passes_with_json() {
    let o = goldmankit(&[
        "verify", "bracket", "--group", "sp", "--n", "2", "--trials", "100", "--seed", "7", "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = json_lines(&o);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["check"], "bracket");
    assert_eq!(lines[0]["seed"], 7);
    assert_eq!(lines[0]["trials"], 100);
    assert_eq!(lines[0]["pass"], true);
}

#[test]
fn plain_trace_bracket_closes() {
    let o = goldmankit(&[
        "bracket",
        "--lhs",
        "tr(a)",
        "--rhs",
        "tr(b)",
        "--check-closure",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = json_lines(&o);
    let terms = lines[0].as_array().unwrap();
    assert_eq!(terms.len(), 3);
    assert!(terms.iter().all(|t| !t["signature"].is_null()));
    let mut coeffs: Vec<&str> = terms.iter().map(|t| t["coeff"].as_str().unwrap()).collect();
    coeffs.sort();
    assert_eq!(coeffs, ["-1/2", "1/2", "1/6"]);
    assert_eq!(lines[1]["check"], "closure");
    assert_eq!(lines[1]["pass"], true);
}

#[test]
fn bracket_text_output_lists_signatures() {
    let o = goldmankit(&["bracket", "--lhs", "tr(a)", "--rhs", "sum i: tr(b; O i)*tr(c; O i)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("signature"));
}

#[test]
fn expression_errors_exit_2() {
    let o = goldmankit(&["bracket", "--lhs", "tr(a; O i)", "--rhs", "tr(b)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unbound index"), "{}", stderr(&o));
}

#[test]
fn rule_gap_exits_1() {
    let o = goldmankit(&["bracket", "--lhs", "tr(a.b)", "--rhs", "tr(c)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no bracket rule"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        goldmankit(&["verify", "casimir", "--group", "e8"]).status.code(),
        Some(2)
    );
    assert_eq!(goldmankit(&["verify", "all"]).status.code(), Some(2));
    assert_eq!(goldmankit(&["verify", "casimir", "--n", "3"]).status.code(), Some(2));
    assert_eq!(
        goldmankit(&["verify", "defect", "--group", "gl"]).status.code(),
        Some(2)
    );
    assert_eq!(
        goldmankit(&["--tol-abs", "-1", "verify", "casimir", "--group", "g2"])
            .status
            .code(),
        Some(2)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_goldmankit"))
        .args(["verify", "casimir", "--group", "g2"])
        .env("GOLDMANKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_budget_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_goldmankit"))
        .args([
            "verify", "bracket", "--group", "so", "--n", "3", "--trials", "20", "--json",
        ])
        .env("GOLDMANKIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

const FIRST: &str = r#"{"r":1,"n1":1,"s":0,"n2":0,"t":1,"K":[[1]],"Q":[[]]}"#;

#[test]
fn spec_files_validate_and_evaluate() {
    let p = write_tmp("first.json", FIRST);
    let p = p.to_str().unwrap();
    assert_eq!(goldmankit(&["exotic", "validate", "--spec", p]).status.code(), Some(0));

    let brute = goldmankit(&[
        "exotic",
        "evaluate",
        "--spec",
        p,
        "--seed",
        "3",
        "--engine",
        "brute-force",
    ]);
    let fact = goldmankit(&["exotic", "evaluate", "--spec", p, "--seed", "3"]);
    let a: f64 = stdout(&brute).trim().parse().unwrap();
    let b: f64 = stdout(&fact).trim().parse().unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));

    let inv = goldmankit(&["exotic", "invariance", "--spec", p, "--trials", "10", "--json"]);
    assert_eq!(inv.status.code(), Some(0));
    assert_eq!(json_lines(&inv)[0]["check"], "exotic-invariance");
}

#[test]
fn instance_files_are_accepted() {
    let id: Vec<Vec<f64>> = (0..7)
        .map(|i| (0..7).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let body = serde_json::json!({
        "spec": serde_json::from_str::<Value>(FIRST).unwrap(),
        "monodromies": [id.clone(), id],
    });
    let p = write_tmp("instance.json", &body.to_string());
    let o = goldmankit(&["exotic", "evaluate", "--spec", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // Σ_i tr(O_i)² with every O_i traceless.
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);
}

#[test]
fn invalid_spec_fails_with_violations() {
    let p = write_tmp("bad.json", r#"{"r":1,"n1":1,"s":0,"n2":0,"t":1,"K":[[0]],"Q":[[]]}"#);
    let o = goldmankit(&["exotic", "validate", "--spec", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("column"), "{}", stdout(&o));
}

#[test]
fn malformed_spec_reports_field_path() {
    let p = write_tmp("malformed.json", r#"{"r":1,"n1":1,"s":0,"n2":0,"t":1,"K":[[1, "x"]]}"#);
    let o = goldmankit(&["exotic", "validate", "--spec", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K[0][1]"), "{}", stderr(&o));

    let missing = write_tmp("missing.json", r#"{"r":1,"s":0,"n2":0,"t":1}"#);
    let o = goldmankit(&["exotic", "validate", "--spec", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n1"), "{}", stderr(&o));
}

#[test]
fn enumerate_lists_and_counts() {
    let list = goldmankit(&["exotic", "enumerate", "--r", "1", "--n1", "2", "--t", "2", "--json"]);
    let specs = json_lines(&list);
    let count = goldmankit(&["exotic", "enumerate", "--n1", "2", "--t", "2", "--count"]);
    assert_eq!(stdout(&count).trim(), specs.len().to_string());
    assert!(specs.iter().all(|s| s["r"] == 1));
}

#[test]
fn quiet_mode_prints_only_the_tally_on_success() {
    let o = goldmankit(&["--quiet", "verify", "lemmas"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "5 checks, 0 failed");
}

#[test]
fn subsuite_runs_are_deterministic() {
    let strip = |o: &Output| {
        json_lines(o)
            .into_iter()
            .map(|mut v| {
                v.as_object_mut().unwrap().remove("elapsed_ms");
                v
            })
            .collect::<Vec<_>>()
    };
    let a = goldmankit(&["verify", "octonion", "--draws", "500", "--seed", "9", "--json"]);
    let b = goldmankit(&["verify", "octonion", "--draws", "500", "--seed", "9", "--json"]);
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a).len(), 5);
}
