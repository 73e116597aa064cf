//! Persisted results: `results.jsonl` (one [`ExperimentRecord`] per line,
//! append-only) and `table_<experiment>.csv` (flat plot data, rewritten per run).

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

pub type Fields = BTreeMap<String, Value>;

/// One line of `results.jsonl`. Maps are ordered, so identical inputs
/// serialize to identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub params: Fields,
    pub outputs: Fields,
    pub tolerances: Fields,
    /// Wall time, or 0 unless timings were requested.
    pub runtime_ms: u64,
}

pub(crate) fn to_fields(v: impl Serialize) -> Fields {
    match serde_json::to_value(v) {
        Ok(Value::Object(m)) => m.into_iter().collect(),
        Ok(other) => BTreeMap::from([("value".to_string(), other)]),
        Err(e) => BTreeMap::from([("serialization_error".to_string(), Value::String(e.to_string()))]),
    }
}

/// Column names plus rows of already-formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
        })
    }

    pub fn results_path(&self) -> PathBuf {
        self.root.join("results.jsonl")
    }

    pub fn table_path(&self, experiment: &str) -> PathBuf {
        self.root.join(format!("table_{experiment}.csv"))
    }

    pub fn append(&self, records: &[ExperimentRecord]) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(self.results_path())?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn write_table(&self, experiment: &str, table: &Table) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(self.table_path(experiment))?;
        w.write_record(&table.headers)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
