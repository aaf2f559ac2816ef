//! CSV emission and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {msg}")]
    Write { path: String, msg: String },
    #[error("row {row} has {got} cells, header has {want}")]
    Ragged { row: usize, got: usize, want: usize },
}

/// Formats `v` with 12 significant digits in plain decimal notation.
pub fn fmt_sig12(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // exponent after rounding to 12 digits
    let sci = format!("{v:.11e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        return "0".into();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_sig12(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> Result<String, OutputError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let err = |e: csv::Error| OutputError::Write { path: "<memory>".into(), msg: e.to_string() };
        w.write_record(&self.header).map_err(err)?;
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.header.len() {
                return Err(OutputError::Ragged { row: i, got: r.len(), want: self.header.len() });
            }
            w.write_record(r.iter().map(Cell::render)).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| OutputError::Write { path: "<memory>".into(), msg: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), OutputError> {
    let text = table.to_csv_string()?;
    std::fs::write(path, text).map_err(|e| OutputError::Write { path: path.display().to_string(), msg: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub args: Vec<String>,
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_manifest(m: &RunManifest, out: &Path) -> Result<PathBuf, OutputError> {
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| OutputError::Write { path: path.display().to_string(), msg: e.to_string() })?;
    Ok(path)
}
