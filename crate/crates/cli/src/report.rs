//! Report, CSV tables and atomic output writing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;

/// Version of the JSON report layout.
pub const REPORT_SCHEMA: &str = "qrlab.report/1";

/// A CSV data file. `schema` names the column contract, see the README.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub schema: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, schema: &'static str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            schema,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Columns `prefix1 … prefixN`.
    pub fn coordinate_columns(prefix: &str, dim: usize) -> Vec<String> {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect()
    }

    pub fn with_columns(name: &str, schema: &'static str, columns: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

/// Shortest round-trip decimal form; `inf`/`NaN` spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub svg: String,
}

impl Plot {
    pub fn file_name(&self) -> String {
        format!("{}.svg", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub schema: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: &'static str,
    pub tool: Tool,
    pub experiment: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    /// The resolved config; re-running it reproduces the report.
    pub config: ExperimentConfig,
    /// One entry per core operation, keyed by operation name.
    pub results: Map<String, Value>,
    /// Work counters: grid points, samples, evaluation budgets.
    pub accounting: Map<String, Value>,
    pub files: Vec<FileEntry>,
    /// Excluded from determinism comparisons.
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl Outcome {
    pub fn succeeded(&self) -> bool {
        self.report.status == Status::Ok
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.partial"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Writes CSV tables, plots and `report.json` into `dir`. Each file is
/// written to a temporary name and renamed, the report last.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &outcome.tables {
        written.push(write_atomic(dir, &t.file_name(), &t.to_csv()?)?);
    }
    for p in &outcome.plots {
        written.push(write_atomic(dir, &p.file_name(), p.svg.as_bytes())?);
    }
    written.push(write_atomic(dir, "report.json", outcome.report.to_json().as_bytes())?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_row() {
        let mut t = Table::new("x", "x/1", &["a", "b"]);
        t.push(vec![num(1.0), num(0.1)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1.0,0.1\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
