use std::process::Command;

use jumpform_cli::{run, validate_text, Op, RunConfig, RunReport, Status};

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_json(text).unwrap()
}

const TANH: &str = r#"{"kind": "stable_like", "alpha": {"kind": "tanh", "base": 1.0, "amplitude": 0.3, "scale": 1.0}}"#;

fn mixed_config() -> String {
    format!(
        r#"{{
        "kernel": {TANH},
        "region": {{"lower": [-1.0], "upper": [1.0]}},
        "functions": {{
            "b1": {{"kind": "bump", "center": [0.0], "radius": 1.0, "cells": 16}},
            "b2": {{"kind": "bump", "center": [0.3], "radius": 0.8, "cells": 16}}
        }},
        "conditions": {{"ids": ["A0", "COND2"], "sampling": {{"cells": 2}}}},
        "forms": {{"per_cell": 3}},
        "requests": [
            {{"op": "apply", "operator": "triplet", "function": "b1", "points": [[-0.5], [0.0], [0.25]]}},
            {{"op": "kappa", "points": [[0.0], [0.5]]}},
            {{"op": "form", "form": "eta", "u": "b1", "v": "b2"}},
            {{"op": "symbol", "alpha": 1.0, "xi": [1.0]}}
        ]
    }}"#
    )
}

#[test]
fn empty_request_list_gives_empty_report() {
    let c = cfg(&format!(r#"{{"kernel": {TANH}}}"#));
    let r = run(&c, None, 1).unwrap();
    assert!(r.results.is_empty());
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn symbol_request_meets_tolerance() {
    let c = cfg(r#"{"kernel": {"kind": "constant_alpha", "alpha": 1.0},
                   "requests": [{"op": "symbol", "alpha": 1.0, "xi": [1.0]}]}"#);
    let r = run(&c, None, 2).unwrap();
    assert_eq!(r.results.len(), 1);
    let rel = r.results[0].payload.as_ref().unwrap()["relative"].as_f64().unwrap();
    assert!(rel <= 1e-3, "relative residual {rel}");
    assert_eq!(r.results[0].status, Status::Pass);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn payloads_identical_across_thread_counts() {
    let c = cfg(&mixed_config());
    let reports: Vec<String> = [1, 4, 8].iter().map(|t| run(&c, None, *t).unwrap().payload_json()).collect();
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn every_request_has_one_entry_in_order() {
    let c = cfg(&mixed_config());
    let r = run(&c, None, 2).unwrap();
    let sources: Vec<&str> = r.results.iter().map(|x| x.source.as_str()).collect();
    assert_eq!(
        sources,
        ["conditions.ids[0]", "conditions.ids[1]", "requests[0]", "requests[1]", "requests[2]", "requests[3]"]
    );
    let only = run(&c, Some(Op::Kappa), 2).unwrap();
    assert_eq!(only.results.len(), 1);
    assert_eq!(only.results[0].op, Op::Kappa);
}

#[test]
fn report_json_round_trips() {
    let c = cfg(&mixed_config());
    let r = run(&c, None, 2).unwrap();
    let back = RunReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn numerical_failures_are_embedded() {
    // a negative density: the split is refused, forms report an error
    let c = cfg(r#"{"kernel": {"kind": "expression", "expr": "-1/abs(x-y)^2"},
                   "functions": {"b": {"kind": "bump", "center": [0.0], "radius": 1.0}},
                   "requests": [{"op": "form", "form": "eta", "u": "b", "v": "b"},
                                {"op": "symbol", "alpha": 1.0, "xi": [1.0]}]}"#);
    let r = run(&c, None, 1).unwrap();
    assert_eq!(r.results.len(), 2);
    assert_eq!(r.results[0].status, Status::Error);
    assert!(r.results[0].error.is_some());
    assert_eq!(r.results[1].status, Status::Pass);
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn csv_has_a_row_per_point() {
    let c = cfg(&mixed_config());
    let r = run(&c, Some(Op::Kappa), 1).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[0].starts_with("source,op,label,status,item,x1,x2,value,note"));
}

#[test]
fn well_formed_config_has_no_diagnostics() {
    assert!(validate_text(&mixed_config()).is_empty());
}

#[test]
fn undefined_function_is_reported_with_path() {
    let text = format!(
        r#"{{"kernel": {TANH},
            "functions": {{"b1": {{"kind": "bump", "center": [0.0], "radius": 1.0}}}},
            "requests": [{{"op": "apply", "operator": "l", "function": "bumpX", "points": [[0.0]]}}]}}"#
    );
    let d = validate_text(&text);
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].path, "requests[0].function");
    assert!(d[0].message.contains("bumpX"));
}

#[test]
fn exponent_outside_domain_is_reported() {
    let d = validate_text(
        r#"{"kernel": {"kind": "stable_like", "alpha": {"kind": "tanh", "base": 1.5, "amplitude": 0.6, "scale": 1.0}}}"#,
    );
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].path, "kernel.alpha");
    assert!(d[0].message.contains("(0, 2)"));
}

#[test]
fn schema_errors_are_diagnostics() {
    let d = validate_text(r#"{"kernel": {"kind": "stable_like"}, "bogus": 1}"#);
    assert_eq!(d.len(), 1);
    assert!(d[0].message.starts_with("schema"));
}

#[test]
fn invalid_config_is_refused_by_run() {
    let c = cfg(r#"{"kernel": {"kind": "constant_alpha", "alpha": 1.0}, "threads": 0}"#);
    let e = run(&c, None, 1).unwrap_err();
    assert_eq!(e.exit_code(), 4);
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_jumpform"));
    c.env_remove("JUMPFORM_THREADS");
    c
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir, "empty.json", &format!(r#"{{"kernel": {TANH}}}"#));
    let s = bin().arg("run").arg("--config").arg(&empty).output().unwrap();
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let report = RunReport::from_json(&String::from_utf8(s.stdout).unwrap()).unwrap();
    assert!(report.results.is_empty());

    let bad = write(&dir, "bad.json", r#"{"kernel": {"kind": "constant_alpha", "alpha": 2.5}}"#);
    let s = bin().arg("validate").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(s.status.code(), Some(4));
    let s = bin().arg("run").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(s.status.code(), Some(4));

    let s = bin().arg("run").arg("--config").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn binary_symbol_subcommand_and_threads_env() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(&dir, "c.json", r#"{"kernel": {"kind": "constant_alpha", "alpha": 1.0}}"#);
    let s = bin()
        .env("JUMPFORM_THREADS", "3")
        .args(["symbol", "--alpha", "1.0", "--xi", "1.0", "--config"])
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert!(v["relative"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn binary_check_emits_condition_array() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        &dir,
        "c.json",
        &format!(r#"{{"kernel": {TANH}, "region": {{"lower": [-1.0], "upper": [1.0]}}, "conditions": {{"sampling": {{"cells": 2}}}}}}"#),
    );
    let out = dir.path().join("out.csv");
    let s = bin()
        .args(["check", "--conditions", "A0,COND2", "--threads", "2", "--config"])
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["condition_id"], "A0");
    assert_eq!(arr[1]["verdict"], "pass");

    let s = bin()
        .args(["check", "--conditions", "A0", "--format", "csv", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().contains("estimate"));
}
