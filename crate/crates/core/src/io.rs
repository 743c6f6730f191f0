//! File formats: tensor and frame JSON, condition reports, trace CSV.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::flow::{FlowTrace, TraceRow};
use crate::frames::{Frame, Weights};
use crate::tensor::CurvatureTensor;

pub const TRACE_HEADER: &str = "t,kmin,kmax,min_iso,min_pic2,scalar,dt,err_est";

/// A float as JSON text; non-finite values become `null`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn num_list(xs: &[f64]) -> String {
    let mut s = String::with_capacity(xs.len() * 24 + 2);
    s.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&num(*x));
    }
    s.push(']');
    s
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

/// Ordered JSON object built from pre-rendered values.
#[derive(Debug, Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, key: &str, value: String) -> Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.raw(key, num(x))
    }

    pub fn str(self, key: &str, s: &str) -> Self {
        self.raw(key, quote(s))
    }

    pub fn int(self, key: &str, v: u64) -> Self {
        self.raw(key, v.to_string())
    }

    pub fn bool(self, key: &str, v: bool) -> Self {
        self.raw(key, v.to_string())
    }

    pub fn render(&self) -> String {
        let mut s = String::from("{\n");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            let sep = if i + 1 < self.fields.len() { "," } else { "" };
            let _ = writeln!(s, "  {}: {}{}", quote(k), v, sep);
        }
        s.push('}');
        s
    }
}

pub fn tensor_to_json(r: &CurvatureTensor) -> String {
    format!(
        "{{\"n\": {}, \"components\": {}}}\n",
        r.dim(),
        num_list(r.components())
    )
}

#[derive(Deserialize)]
struct TensorFile {
    n: usize,
    components: Vec<f64>,
}

/// Parses a tensor file; the components must satisfy the symmetries.
pub fn tensor_from_json(text: &str) -> Result<CurvatureTensor> {
    let file: TensorFile = serde_json::from_str(text)?;
    CurvatureTensor::from_components(file.n, file.components)
}

pub fn write_tensor(path: &Path, r: &CurvatureTensor) -> Result<()> {
    std::fs::write(path, tensor_to_json(r))?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<CurvatureTensor> {
    tensor_from_json(&std::fs::read_to_string(path)?)
}

pub fn frame_to_json(f: &Frame) -> String {
    let rows: Vec<String> = f.rows().iter().map(|r| num_list(r)).collect();
    format!("{{\"n\": {}, \"vectors\": [{}]}}", f.dim(), rows.join(", "))
}

#[derive(Deserialize)]
struct FrameFile {
    n: usize,
    vectors: Vec<Vec<f64>>,
}

pub fn frame_from_json(text: &str) -> Result<Frame> {
    let file: FrameFile = serde_json::from_str(text)?;
    if file.vectors.iter().any(|v| v.len() != file.n) {
        return Err(Error::Parse(format!("frame vectors must have length {}", file.n)));
    }
    Frame::new(file.vectors)
}

pub fn weights_to_json(w: Option<Weights>) -> String {
    match w {
        Some(w) => format!("{{\"lambda\": {}, \"mu\": {}}}", num(w.lambda()), num(w.mu())),
        None => "null".to_string(),
    }
}

/// Report object with the fixed leading fields
/// `condition, decision, min_value, margin, frame, weights, restarts, seed`.
pub fn report_object(
    condition: &str,
    decision: bool,
    report: &ConditionReport,
    margin: f64,
) -> JsonObject {
    JsonObject::new()
        .str("condition", condition)
        .bool("decision", decision)
        .num("min_value", report.min_value)
        .num("margin", margin)
        .raw("frame", frame_to_json(&report.argmin_frame))
        .raw("weights", weights_to_json(report.argmin_weights))
        .int("restarts", report.restarts as u64)
        .int("seed", report.seed)
        .int("iterations", report.iterations as u64)
        .num("grad_norm", report.grad_norm)
        .bool("converged", report.converged)
}

pub fn write_trace_csv(trace: &FlowTrace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        let cells = [r.t, r.kmin, r.kmax, r.min_iso, r.min_pic2, r.scalar, r.dt, r.err_est];
        let line: Vec<String> = cells.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "expected trace header {TRACE_HEADER:?}, found {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("trace row {}: {e}", i + 1)))?;
            if cells.len() != 8 {
                return Err(Error::Parse(format!(
                    "trace row {} has {} columns, expected 8",
                    i + 1,
                    cells.len()
                )));
            }
            Ok(TraceRow {
                t: cells[0],
                kmin: cells[1],
                kmax: cells[2],
                min_iso: cells[3],
                min_pic2: cells[4],
                scalar: cells[5],
                dt: cells[6],
                err_est: cells[7],
                tracked_u: None,
            })
        })
        .collect()
}

/// Extremes over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub rows: usize,
    pub t_end: f64,
    pub min_kmin: f64,
    pub max_kmax: f64,
    pub min_iso: f64,
    pub min_pic2: f64,
    pub max_err_est: f64,
}

pub fn summarize_trace(rows: &[TraceRow]) -> Result<TraceSummary> {
    if rows.is_empty() {
        return Err(Error::Parse("trace has no rows".into()));
    }
    let fold_min = |f: fn(&TraceRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let fold_max = |f: fn(&TraceRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    Ok(TraceSummary {
        rows: rows.len(),
        t_end: rows.last().map(|r| r.t).unwrap_or(0.0),
        min_kmin: fold_min(|r| r.kmin),
        max_kmax: fold_max(|r| r.kmax),
        min_iso: fold_min(|r| r.min_iso),
        min_pic2: fold_min(|r| r.min_pic2),
        max_err_est: fold_max(|r| r.err_est),
    })
}
