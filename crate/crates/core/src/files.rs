//! CSV tables and all-or-nothing file writes.
//!
//! Numbers are written in shortest round-trip scientific notation, so a
//! table read back reproduces every value bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A rectangular numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a column; all columns must have equal length.
    pub fn with(mut self, header: &str, values: Vec<f64>) -> Self {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column {header} has a different length");
        }
        self.headers.push(header.to_string());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::Schema(format!("missing column `{name}` (have {})", self.headers.join(", "))))
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        let mut row = Vec::with_capacity(self.columns.len());
        for i in 0..self.rows() {
            row.clear();
            row.extend(self.columns.iter().map(|c| format_number(c[i])));
            w.write_record(&row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers: Vec<String> = r
            .headers()
            .map_err(|e| Error::Schema(format!("unreadable CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Schema("CSV has no header row".into()));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| Error::Schema(format!("malformed CSV: {e}")))?;
            for (col, field) in columns.iter_mut().zip(record.iter()) {
                let v = field
                    .parse::<f64>()
                    .map_err(|_| Error::Schema(format!("non-numeric value `{field}` in data row {}", line + 1)))?;
                col.push(v);
            }
        }
        Ok(Table { headers, columns })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&bytes)
    }
}

/// Shortest representation that parses back to the same `f64`, in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so `path` either keeps its old contents or receives all of the new ones.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
