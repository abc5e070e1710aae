//! Plain CSV output: comma separator, `.` decimal point, `#` metadata lines.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! same numbers always give the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable {
            metadata: Vec::new(),
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::contract(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Build a table from equally long columns.
    pub fn from_columns<S: AsRef<str>>(header: &[S], columns: &[&[f64]]) -> Result<Self> {
        if header.len() != columns.len() {
            return Err(Error::contract("header and column count differ"));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::contract("columns have different lengths"));
        }
        let mut t = CsvTable::new(header);
        t.rows = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        Ok(t)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_float(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Parse a table written by [`CsvTable::render`].
pub fn parse(text: &str) -> Result<CsvTable> {
    let mut table = CsvTable::default();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = None;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once(':').unwrap_or((rest, ""));
            table.metadata.push((k.trim().to_string(), v.trim().to_string()));
        } else {
            header = Some(line);
            break;
        }
    }
    let header = header.ok_or_else(|| Error::contract("missing header line"))?;
    table.header = header.split(',').map(|s| s.trim().to_string()).collect();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| match f.trim() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                s => s
                    .parse::<f64>()
                    .map_err(|e| Error::contract(format!("row {}: {e}", i + 1))),
            })
            .collect::<Result<Vec<f64>>>()?;
        table.push(row)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = CsvTable::new(&["y", "v"]).meta("model", "fold");
        t.push(vec![-0.5, 0.1 + 0.2]).unwrap();
        t.push(vec![1e-300, f64::NAN]).unwrap();
        let text = t.render();
        assert!(text.starts_with("# model: fold\ny,v\n"));
        let back = parse(&text).unwrap();
        assert_eq!(back.header, t.header);
        assert_eq!(back.rows[0], t.rows[0]);
        assert!(back.rows[1][1].is_nan());
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut t = CsvTable::new(&["a", "b"]);
        assert!(t.push(vec![1.0]).is_err());
        assert!(CsvTable::from_columns(&["a", "b"], &[&[1.0], &[1.0, 2.0]]).is_err());
    }
}
