//! Report records and where they are written.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub passed: bool,
    pub epsilon: Option<f64>,
    pub delta_measured: Option<f64>,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub trials: Option<u64>,
    pub ci: Option<(f64, f64)>,
    pub config: ExperimentConfig,
    pub details: Value,
}

/// Tabular series written next to the JSON report.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Writes the JSON report to `out` (stdout when absent) and the table to the
/// same path with a `.csv` extension.
pub fn emit(report: &Report, table: &Table, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)? + "\n";
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            let csv = csv_path(path);
            let file = std::fs::File::create(&csv).with_context(|| format!("writing {}", csv.display()))?;
            table.write_to(file)?;
        }
        None => print!("{json}"),
    }
    Ok(())
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
