//! Long-format result tables and their CSV form.
//!
//! Every table has the columns `kind, point, statistic, unit, value,
//! reference, stderr`, one row per (parameter point, statistic). Empty
//! `reference` or `stderr` cells mean "not applicable". Numbers use the
//! shortest representation that reads back to the same `f64`.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

pub const COLUMNS: [&str; 7] = ["kind", "point", "statistic", "unit", "value", "reference", "stderr"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: String,
    pub statistic: String,
    pub unit: &'static str,
    pub value: f64,
    pub reference: Option<f64>,
    pub stderr: Option<f64>,
}

impl Row {
    pub fn new(point: impl Into<String>, statistic: impl Into<String>, unit: &'static str, value: f64) -> Self {
        Self {
            point: point.into(),
            statistic: statistic.into(),
            unit,
            value,
            reference: None,
            stderr: None,
        }
    }

    pub fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn stderr(mut self, s: f64) -> Self {
        self.stderr = Some(s);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub kind: String,
    /// `(key, value)` pairs written as `# key: value` lines.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            metadata: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// First row with the given point and statistic.
    pub fn get(&self, point: &str, statistic: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.point == point && r.statistic == statistic)
    }

    /// All rows with the given statistic, in table order.
    pub fn column<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a Row> {
        self.rows.iter().filter(move |r| r.statistic == statistic)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.kind,
                quote(&r.point),
                quote(&r.statistic),
                r.unit,
                fmt_f64(r.value),
                opt(r.reference),
                opt(r.stderr)
            );
        }
        out
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-5, 1e16)`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}
