use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn czi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_czi"))
        .args(args)
        .env_remove("CZI_THREADS")
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn value(r: &Value) -> f64 {
    r["outputs"]["value"].as_f64().unwrap()
}

#[test]
fn hk_max_reports() {
    let out = czi(&["hk-max", "--channel", "1,0.5,1,0", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((value(&r) - 1.107516).abs() <= 2e-5);
    assert!(r["outputs"]["support"]["w"].is_number());
    assert!(r["error_budgets"]["total"].as_f64().unwrap() < 1e-6);

    let flat = report(&czi(&["hk-max", "--channel", "0.5,0.5,0.5,0.5", "--lambda", "3"]));
    assert_eq!(value(&flat), 1.0);
}

#[test]
fn hk_max_rejects_small_lambda() {
    let out = czi(&["hk-max", "--channel", "1,0.5,1,0", "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tin"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_inputs_exit_2() {
    assert_eq!(czi(&["hk-max", "--channel", "1,0.5,1,1.5", "--lambda", "2"]).status.code(), Some(2));
    assert_eq!(czi(&["two-letter", "--channel", "1,0.5", "--lambda", "2"]).status.code(), Some(2));
    assert_eq!(czi(&["search", "--trials", "0"]).status.code(), Some(2));
    let env = Command::new(env!("CARGO_BIN_EXE_czi"))
        .args(["tin", "--channel", "1,0.5,1,0", "--lambda", "1"])
        .env("CZI_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
}

#[test]
fn two_letter_reports() {
    let args = ["two-letter", "--channel", "1,0.5,1,0", "--lambda", "2", "--seed", "3"];
    let a = report(&czi(&args));
    assert!(value(&a) >= 1.1079 && (value(&a) - 1.108141).abs() <= 1e-3);
    assert_eq!(a["seed"], 3);
    let b = report(&czi(&args));
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["inputs"], b["inputs"]);

    let flat = report(&czi(&["two-letter", "--channel", "0.5,0.5,0.5,0.5", "--lambda", "2"]));
    assert_eq!(value(&flat), 1.0);
}

#[test]
fn echoed_command_reproduces_outputs() {
    let first = report(&czi(&["tin", "--channel", "0.2,0.9,0.6,0.1", "--lambda", "2.5"]));
    let echo: Vec<String> = first["command"].as_array().unwrap()[1..]
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let args: Vec<&str> = echo.iter().map(String::as_str).collect();
    let second = report(&czi(&args));
    assert_eq!(first["outputs"], second["outputs"]);
}

#[test]
fn verify_table_single_row_with_csv() {
    let path = tmp("row1.csv");
    let out = czi(&["verify-table", "--rows", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["outputs"]["total"], 1);
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "row,lambda,channel,hk_table,hk_ours,two_table,two_ours,gap,status"
    );
    assert!(lines.next().unwrap().ends_with(",PASS"));
    assert!(lines.next().is_none());
}

#[test]
fn verify_table_fail_path() {
    let out = czi(&["verify-table", "--rows", "1", "--hk-tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["outputs"]["rows"][0]["hk_ok"], false);
}

#[test]
fn verify_table_full_run() {
    let out = czi(&["verify-table"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outputs"]["passed"], 17);
}

#[test]
fn verify_appendix_passes() {
    let out = czi(&["verify-appendix"]);
    assert_eq!(out.status.code(), Some(0));
    let o = &report(&out)["outputs"];
    assert!(o["bound"].as_f64().unwrap() <= 1.107577 + 1e-6);
    assert!((o["two_letter_point"].as_f64().unwrap() - 1.1080356).abs() <= 5e-7);
    assert!(o["envelope_max_abs_diff"].as_f64().unwrap() <= 1e-7);
    assert!((o["margin"].as_f64().unwrap() - 4.6e-4).abs() < 2e-5);
}

fn search_file(name: &str, threads: &str, extra: &[&str]) -> Vec<u8> {
    let path = tmp(name);
    let mut args = vec!["--threads", threads, "search", "--trials", "3", "--lambdas", "2,3", "--seed", "7"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = czi(&args);
    assert_eq!(out.status.code(), Some(0));
    std::fs::read(path).unwrap()
}

#[test]
fn search_output_is_deterministic() {
    let a = search_file("s_a.jsonl", "1", &["--all"]);
    let b = search_file("s_b.jsonl", "1", &["--all"]);
    let c = search_file("s_c.jsonl", "8", &["--all"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 6);
}

#[test]
fn search_with_unit_threshold_flags_nothing() {
    let path = tmp("s_none.jsonl");
    let out = czi(&["search", "--trials", "2", "--lambdas", "2", "--threshold", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outputs"]["flagged"], Value::Array(vec![]));
    assert!(std::fs::read(path).unwrap().is_empty());
}
