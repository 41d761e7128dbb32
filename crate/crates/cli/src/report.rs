//! Run reports and their JSON / CSV renderings.
//!
//! Payloads are stored as JSON values. Non-finite floats (a diverging
//! estimate, a missing value) become `null`, so a report read back equals
//! the report written.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Op;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// The request could not be evaluated; `error` says why.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestResult {
    pub op: Op,
    /// `conditions.ids[i]` or `requests[i]`.
    pub source: String,
    pub label: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RequestResult {
    pub fn ok<T: Serialize>(op: Op, source: String, label: String, status: Status, payload: &T) -> Self {
        match serde_json::to_value(payload) {
            Ok(v) => Self { op, source, label, status, payload: Some(v), error: None },
            Err(e) => Self::failed(op, source, label, format!("payload: {e}")),
        }
    }

    pub fn failed(op: Op, source: String, label: String, error: impl Into<String>) -> Self {
        Self { op, source, label, status: Status::Error, payload: None, error: Some(error.into()) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub error: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the canonical config JSON, thread count left out.
    pub config_digest: String,
    pub results: Vec<RequestResult>,
    pub summary: Summary,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(config_digest: String, results: Vec<RequestResult>, wall_time_s: f64) -> Self {
        let mut summary = Summary::default();
        for r in &results {
            match r.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Inconclusive => summary.inconclusive += 1,
                Status::Error => summary.error += 1,
            }
        }
        Self {
            tool: "jumpform".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_digest,
            results,
            summary,
            wall_time_s,
        }
    }

    /// 0 when everything passed, 2 on any failure or error, 3 when the
    /// worst outcome is inconclusive.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail + self.summary.error > 0 {
            2
        } else if self.summary.inconclusive > 0 {
            3
        } else {
            0
        }
    }

    /// Everything except the wall time, for comparing runs.
    pub fn payload_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        serde_json::to_string(&r).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Output(format!("report: {e}")))
    }

    /// One row per point-indexed value: operator values, κ̂ values and
    /// condition witnesses; scalar results get a single row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Output(e.to_string());
        out.write_record(["source", "op", "label", "status", "item", "x1", "x2", "value", "note"]).map_err(err)?;
        for r in &self.results {
            for row in rows(r) {
                let rec = [
                    r.source.clone(),
                    op_name(r.op).to_string(),
                    r.label.clone(),
                    status_name(r.status).to_string(),
                    row.item,
                    row.x.first().map(num).unwrap_or_default(),
                    row.x.get(1).map(num).unwrap_or_default(),
                    row.value.map(|v| num(&v)).unwrap_or_default(),
                    row.note,
                ];
                out.write_record(&rec).map_err(err)?;
            }
        }
        out.flush().map_err(|e| CliError::Output(e.to_string()))
    }
}

fn num(v: &f64) -> String {
    format!("{v:e}")
}

fn op_name(op: Op) -> &'static str {
    match op {
        Op::Check => "check",
        Op::Apply => "apply",
        Op::Form => "form",
        Op::Kappa => "kappa",
        Op::Symbol => "symbol",
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inconclusive => "inconclusive",
        Status::Error => "error",
    }
}

struct Row {
    item: String,
    x: Vec<f64>,
    value: Option<f64>,
    note: String,
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn rows(r: &RequestResult) -> Vec<Row> {
    let Some(p) = &r.payload else {
        return vec![Row { item: String::new(), x: vec![], value: None, note: r.error.clone().unwrap_or_default() }];
    };
    let point_rows = |p: &Value, note_key: &str| -> Vec<Row> {
        let points = p["points"].as_array().cloned().unwrap_or_default();
        let values = p["values"].as_array().cloned().unwrap_or_default();
        points
            .iter()
            .enumerate()
            .map(|(i, x)| Row {
                item: i.to_string(),
                x: floats(x),
                value: values.get(i).and_then(Value::as_f64),
                note: p[note_key].get(i).map(|n| if n.is_null() { String::new() } else { n.to_string() }).unwrap_or_default(),
            })
            .collect()
    };
    match r.op {
        Op::Apply if p.get("l").is_some() => {
            let mut out = Vec::new();
            for key in ["l", "lambda", "ltilde"] {
                for mut row in point_rows(&p[key], "diagnostics") {
                    row.item = format!("{key}[{}]", row.item);
                    row.note.clear();
                    out.push(row);
                }
            }
            out
        }
        Op::Apply => point_rows(p, "diagnostics").into_iter().map(|mut r| {
            r.note.clear();
            r
        }).collect(),
        Op::Kappa => point_rows(p, "errors"),
        Op::Check => {
            let est = p["estimate"].as_f64();
            let mut out = vec![Row { item: "estimate".into(), x: vec![], value: est, note: String::new() }];
            for (i, w) in p["witness_points"].as_array().cloned().unwrap_or_default().iter().enumerate() {
                out.push(Row {
                    item: format!("witness[{i}]"),
                    x: floats(&w["x"]),
                    value: w["value"].as_f64(),
                    note: w["note"].as_str().unwrap_or_default().to_string(),
                });
            }
            out
        }
        Op::Symbol => vec![Row { item: "relative".into(), x: floats(&p["x"]), value: p["relative"].as_f64(), note: String::new() }],
        Op::Form => {
            let value = p["total"].as_f64().or_else(|| p.as_f64()).or_else(|| p["value"]["total"].as_f64());
            match p.get("sequence") {
                Some(seq) => seq
                    .as_array()
                    .cloned()
                    .unwrap_or_default()
                    .iter()
                    .map(|e| Row {
                        item: format!("n={}", e["n"]),
                        x: vec![],
                        value: e["value"].as_f64(),
                        note: String::new(),
                    })
                    .collect(),
                None => vec![Row { item: "value".into(), x: vec![], value, note: String::new() }],
            }
        }
    }
}
