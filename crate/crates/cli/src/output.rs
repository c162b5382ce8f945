//! Tabular and JSON artifacts. Every artifact carries the tool version and
//! the config hash.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(raw: &str) -> Result<Self, crate::config::ConfigError> {
        match raw {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(crate::config::ConfigError { field: "format".into(), message: format!("'{other}' is not csv or json") }),
        }
    }
}

/// A column and what it holds.
pub struct Column {
    pub name: String,
    pub description: String,
}

impl Column {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into() }
    }
}

pub struct Table {
    pub kind: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(kind: &'static str, columns: Vec<Column>) -> Self {
        Self { kind, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn header(&self, cfg: &ExperimentConfig) -> Value {
        json!({
            "tool": "ebc",
            "version": VERSION,
            "kind": self.kind,
            "config_hash": cfg.hash(),
            "config": cfg.hashed_values(),
        })
    }

    pub fn schema(&self, cfg: &ExperimentConfig) -> Value {
        let mut doc = self.header(cfg);
        doc["columns"] = self.columns.iter().map(|c| json!({"name": c.name, "description": c.description})).collect();
        doc
    }

    pub fn render(&self, cfg: &ExperimentConfig, format: Format) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
        match format {
            Format::Json => {
                let mut doc = self.header(cfg);
                doc["columns"] = self.columns.iter().map(|c| Value::from(c.name.clone())).collect();
                doc["rows"] = Value::from(self.rows.clone());
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut out = format!("# ebc {VERSION} {} config {}\n", self.kind, cfg.hash()).into_bytes();
                {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
                    for row in &self.rows {
                        w.write_record(row.iter().map(cell))?;
                    }
                    w.flush()?;
                }
                Ok(out)
            }
        }
    }

    /// Writes the table to `out` (or stdout); CSV files get a schema beside them.
    pub fn emit(&self, cfg: &ExperimentConfig, format: Format, out: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
        let bytes = self.render(cfg, format)?;
        match out {
            Some(path) => {
                std::fs::write(path, bytes)?;
                if format == Format::Csv {
                    let schema = serde_json::to_vec_pretty(&self.schema(cfg))?;
                    std::fs::write(schema_path(path), schema)?;
                }
            }
            None => std::io::stdout().write_all(&bytes)?,
        }
        Ok(())
    }
}

pub fn schema_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// A JSON document stamped with version and config hash.
pub fn stamped(kind: &str, cfg: &ExperimentConfig, body: Value) -> Value {
    json!({
        "tool": "ebc",
        "version": VERSION,
        "kind": kind,
        "config_hash": cfg.hash(),
        "config": cfg.hashed_values(),
        "result": body,
    })
}

pub fn write_json(doc: &Value, out: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}
