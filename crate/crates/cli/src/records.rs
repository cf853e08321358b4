//! Append-only experiment records, one JSON line (or CSV row) each.
//!
//! Records are self-describing through the schema version field. Reruns with
//! identical flags reproduce every field bit-for-bit except the wall-time
//! fields (`wall_time_ns`, `wall_clock_ms`).

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ExperimentRecord {
    pub schema: u32,
    pub experiment: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs9: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_ns: Option<u64>,
    pub threads: usize,
    pub wall_time_ns: u64,
    pub wall_clock_ms: u64,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            seed,
            threads: 1,
            wall_clock_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

const CSV_HEADER: &str = "schema,experiment,seed,strategy,kind,trial,m_total,m0,n_total,blocks,\
cols,lambda,eps,ratio,success,rel_error,lhs9,lhs10,delta_norm,median_ns,threads,wall_time_ns,\
wall_clock_ms";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records<W: Write>(
    mut w: W,
    records: &[ExperimentRecord],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Json => {
            for r in records {
                serde_json::to_writer(&mut w, r)?;
                writeln!(w)?;
            }
        }
        OutputFormat::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            for r in records {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.schema,
                    r.experiment,
                    r.seed,
                    opt(&r.strategy),
                    opt(&r.kind),
                    opt(&r.trial),
                    opt(&r.m_total),
                    opt(&r.m0),
                    opt(&r.n_total),
                    opt(&r.blocks),
                    opt(&r.cols),
                    opt(&r.lambda),
                    opt(&r.eps),
                    opt(&r.ratio),
                    opt(&r.success),
                    opt(&r.rel_error),
                    opt(&r.lhs9),
                    opt(&r.lhs10),
                    opt(&r.delta_norm),
                    opt(&r.median_ns),
                    r.threads,
                    r.wall_time_ns,
                    r.wall_clock_ms,
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_lines_omit_empty_fields_and_keep_schema() {
        let mut r = ExperimentRecord::new("sweep", 7);
        r.ratio = Some(1.25);
        let mut buf = Vec::new();
        write_records(&mut buf, &[r], OutputFormat::Json).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"schema\":1"));
        assert!(line.contains("\"ratio\":1.25"));
        assert!(!line.contains("lhs9"));
        assert_eq!(line.matches('\n').count(), 1);
    }

    #[test]
    fn csv_has_fixed_column_count() {
        let r = ExperimentRecord::new("bench", 0);
        let mut buf = Vec::new();
        write_records(&mut buf, &[r], OutputFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header_cols = lines.next().unwrap().split(',').count();
        let row_cols = lines.next().unwrap().split(',').count();
        assert_eq!(header_cols, row_cols);
    }
}
