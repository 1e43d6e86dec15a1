//! CSV and JSON writers.
//!
//! Every CSV starts with one `#` metadata line, the only line that changes
//! between identical runs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// A table of formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len(), "ragged row in {}", self.name);
        self.rows.push(row);
    }

    /// Column `name` parsed back to numbers; blank cells are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let j = self.headers.iter().position(|h| h == name).expect("known column");
        self.rows.iter().filter_map(|r| r[j].parse().ok()).collect()
    }
}

/// Figure data: every entry a finite real.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FigureTable {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.to_string(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), CliError> {
        if row.len() != self.headers.len() {
            return Err(CliError::Numerical(format!("{}: ragged row", self.name)));
        }
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Numerical(format!("{}: non-finite entry {x}", self.name)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let j = self.headers.iter().position(|h| h == name).expect("known column");
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn to_table(&self) -> Table {
        Table {
            name: self.name.clone(),
            headers: self.headers.clone(),
            rows: self.rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect(),
        }
    }
}

/// Shortest round-trip form: plain decimals in `[1e-4, 1e15)`, exponent
/// notation elsewhere, negative zero as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Blank cell for a missing value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("cannot write {}: {e}", path.display()))
}

pub struct Writer {
    pub dir: PathBuf,
    pub command: String,
    pub seed: u64,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, command: &str, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), command: command.to_string(), seed, written: Vec::new() })
    }

    pub fn csv(&mut self, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}.csv", table.name));
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut file = File::create(&path).map_err(|e| io(&path, e))?;
        writeln!(
            file,
            "# adol {} table={} format={} seed={} generated_unix={stamp}",
            self.command,
            table.name,
            crate::config::FORMAT_VERSION,
            self.seed
        )
        .map_err(|e| io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&table.headers).map_err(|e| io(&path, e))?;
        for row in &table.rows {
            w.write_record(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
