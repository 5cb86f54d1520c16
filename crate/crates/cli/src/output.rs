//! File emission. Every file carries the resolved config, its hash and the
//! tool version; nothing time-dependent is written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip any f64.
            Cell::F(x) => format!("{x:.16e}"),
            Cell::U(u) => u.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::U(u) => json!(u),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(u: usize) -> Self {
        Cell::U(u as u64)
    }
}

impl From<u64> for Cell {
    fn from(u: u64) -> Self {
        Cell::U(u)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_owned())
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self::with_columns(columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
    command: &'static str,
    config: RunConfig,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(config: &RunConfig, command: &'static str) -> Result<Self, CliError> {
        let dir = config.out.clone();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut w = Writer {
            dir,
            format: config.format,
            command,
            config: config.clone(),
            written: Vec::new(),
        };
        let text = format!("{}{}", w.header("# "), config);
        w.write_raw("config.txt", &text)?;
        Ok(w)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self, prefix: &str) -> String {
        format!(
            "{prefix}betaflow {VERSION}\n{prefix}command = {}\n{prefix}config_sha256 = {}\n",
            self.command,
            self.config.hash()
        )
    }

    fn meta(&self) -> Value {
        let config: serde_json::Map<String, Value> = self
            .config
            .pairs()
            .into_iter()
            .map(|(k, v)| (k.to_owned(), Value::String(v)))
            .collect();
        json!({
            "tool": "betaflow",
            "version": VERSION,
            "command": self.command,
            "config_sha256": self.config.hash(),
            "config": config,
        })
    }

    fn write_raw(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json` per the configured format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut text = self.header("# ");
                for (k, v) in self.config.pairs() {
                    text.push_str(&format!("# {k} = {v}\n"));
                }
                text.push_str(&table.columns.join(","));
                text.push('\n');
                for row in &table.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    text.push_str(&cells.join(","));
                    text.push('\n');
                }
                self.write_raw(&format!("{stem}.csv"), &text)
            }
            Format::Json => {
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let doc = json!({ "meta": self.meta(), "columns": table.columns, "rows": rows });
                self.json_doc(stem, &doc)
            }
        }
    }

    /// Writes `<stem>.json` regardless of the configured format.
    pub fn report<T: Serialize>(&mut self, stem: &str, report: &T) -> Result<(), CliError> {
        let doc = json!({ "meta": self.meta(), "report": report });
        self.json_doc(stem, &doc)
    }

    fn json_doc(&mut self, stem: &str, doc: &Value) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(doc).map_err(|e| CliError::Numeric(e.to_string()))?;
        text.push('\n');
        self.write_raw(&format!("{stem}.json"), &text)
    }
}

pub fn display(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
