//! Structured study reports and the CSV/JSON artifact formats.
//!
//! Floating-point values in CSV artifacts are printed with 17 significant
//! digits so identical runs produce byte-identical files.

use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// 17-significant-digit rendering used by every CSV artifact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Small CSV builder with the pinned float format.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvTable {
            header: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<CsvCell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows
            .push(cells.into_iter().map(|c| c.render()).collect());
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub enum CsvCell {
    F(f64),
    I(i64),
    U(u64),
    S(String),
}

impl CsvCell {
    fn render(self) -> String {
        match self {
            CsvCell::F(v) => fmt_f64(v),
            CsvCell::I(v) => v.to_string(),
            CsvCell::U(v) => v.to_string(),
            CsvCell::S(v) => v,
        }
    }
}

/// Per-claim structured result; reproducible from `(claim, config, seed)`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub claim: String,
    pub pass: bool,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn new(claim: &str, seed: u64) -> Self {
        ExperimentReport {
            claim: claim.to_string(),
            pass: false,
            seed,
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn param<S: ToString>(&mut self, key: &str, value: S) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn note<S: Into<String>>(&mut self, text: S) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Writes an artifact file, creating parent directories.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}
