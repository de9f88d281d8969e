//! CSV emission and the JSON run manifest.

use crate::error::Result;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Shortest round-trip scientific notation; NaN is spelled `nan`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:e}")
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => fmt_real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}
impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}
impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A header plus rows, all rendered the same way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Manifest path for a CSV path: `out.csv` becomes `out.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    created_unix_s: u64,
    output: String,
    rows: usize,
    config: &'a C,
    notes: &'a [&'a str],
}

/// Modeling choices recorded with every run.
pub const MODEL_NOTES: &[&str] = &[
    "inter-element distance squares both axis offsets (true Euclidean distance)",
    "correlation square root clamps eigenvalues below 1e-12 of the largest to zero",
    "Monte Carlo SOP counts trials with secrecy capacity <= R_s; bound is Pr(gamma_b <= 2^R_s gamma_e)",
    "ASC bound is reported unclamped; asc_bound_negative flags rows where it is below zero",
    "adaptive policies fit k_b and theta_b from ensemble-averaged traces of the selected submatrix",
];

pub fn write_manifest<C: Serialize>(csv: &Path, command: &str, config: &C, rows: usize) -> Result<PathBuf> {
    let path = manifest_path(csv);
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        created_unix_s: created,
        output: csv.display().to_string(),
        rows,
        config,
        notes: MODEL_NOTES,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| crate::Error::Io(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(1.0), "1e0");
        assert_eq!(fmt_real(0.25), "2.5e-1");
        assert_eq!(fmt_real(f64::NAN), "nan");
        assert_eq!(fmt_real(-1234.5), "-1.2345e3");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(vec![Cell::from(1.5), Cell::from(3usize), Cell::from("x,y")]);
        t.push(vec![Cell::from(f64::NAN), Cell::from(false), Cell::from("plain")]);
        assert_eq!(t.to_csv_string(), "a,b,c\n1.5e0,3,\"x,y\"\nnan,false,plain\n");
        assert_eq!(t.column("b"), Some(1));
    }

    #[test]
    fn manifest_next_to_csv() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("run.csv");
        let p = write_manifest(&csv, "sweep-asc", &serde_json::json!({"seed": 3}), 2).unwrap();
        assert_eq!(p, dir.path().join("run.manifest.json"));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(v["config"]["seed"], 3);
        assert_eq!(v["rows"], 2);
    }
}
