//! CSV tables with a one-line JSON manifest header.
//!
//! The first line of every output is `#` followed by a compact JSON object
//! (keys sorted) with `tool`, `version`, `experiment`, `seed`,
//! `realizations`, `config_sha256`, `columns` and an experiment-specific
//! `summary`. The remaining lines are a header row and the data. Floats are
//! written in Rust's shortest round-trip form (exponent notation outside
//! `[1e-4, 1e16)`), so identical runs produce
//! identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(&'static str),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as u64)
    }
}

impl From<&'static str> for Cell {
    fn from(x: &'static str) -> Self {
        Self::Text(x)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Debug switches to exponent notation for tiny and huge values.
            Self::Float(x) => format!("{x:?}"),
            Self::Int(x) => x.to_string(),
            Self::Text(s) => (*s).to_string(),
            Self::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalar results attached to the manifest.
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

pub fn manifest(config: &ExperimentConfig, table: &Table) -> Value {
    json!({
        "tool": "tiedecay",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment,
        "seed": config.seed,
        "realizations": config.realizations,
        "config_sha256": config.sha256,
        "columns": table.columns,
        "summary": table.summary,
    })
}

pub fn render(config: &ExperimentConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "#{}", manifest(config, table))?;
    let mut w = csv::Writer::from_writer(buf);
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial table.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| CliError::Io(e.error))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::parse("experiment = \"ahmad-trace\"\nseed = 3\n[params]\np = 0.5\nalpha = 0.1\nsteps = 2\n").unwrap()
    }

    #[test]
    fn header_line_is_json_manifest() {
        let mut t = Table::new(&["t", "s"]);
        t.push(vec![0usize.into(), 0.1.into()]);
        t.note("answer", 42);
        let bytes = render(&config(), &t).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let (first, rest) = text.split_once('\n').unwrap();
        let m: Value = serde_json::from_str(first.strip_prefix('#').unwrap()).unwrap();
        assert_eq!(m["experiment"], "ahmad-trace");
        assert_eq!(m["seed"], 3);
        assert_eq!(m["summary"]["answer"], 42);
        assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(rest, "t,s\n0,0.1\n");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, 8.9e-80, 1.0, 0.0, 3e20] {
            assert_eq!(Cell::from(x).render().parse::<f64>().unwrap(), x);
        }
        assert_eq!(Cell::from(8.9e-80).render(), "8.9e-80");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.csv", b"one").unwrap();
        let path = write_atomic(dir.path(), "a.csv", b"two").unwrap();
        assert_eq!(std::fs::read(path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
