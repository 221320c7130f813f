//! Per-iteration and per-rescale telemetry, written as line-delimited JSON.

use crate::rescale::RescaleReport;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Iteration {
        phase: usize,
        iter: usize,
        phi_log: f64,
        norm_y_dual: f64,
        epsilon: f64,
        mode: String,
    },
    Rescale {
        phase: usize,
        report: RescaleReport,
    },
    PhaseEnd {
        phase: usize,
        outcome: String,
        iterations: usize,
    },
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(text: &str) -> serde_json::Result<Vec<TraceRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
