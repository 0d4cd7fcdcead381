//! CSV tables with a one-line JSON header comment.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wasserstein::SampleSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Failed,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Failed => "FAILED".to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or very small magnitudes.
pub fn format_f64(x: f64) -> String {
    let m = x.abs();
    if m != 0.0 && m.is_finite() && !(1e-5..1e16).contains(&m) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// A row whose leading key cells are kept and the rest marked failed.
    pub fn push_failed(&mut self, keys: Vec<Cell>) {
        let mut row = keys;
        row.resize(self.columns.len(), Cell::Failed);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write<W: Write>(&self, meta: &Meta, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {}", serde_json::to_string(meta)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, meta: &Meta) -> Result<String> {
        let mut buf = Vec::new();
        self.write(meta, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Read one point per row. Lines starting with `#` are skipped. A header
/// row is optional; when present, only `theta_*` columns are used and, if a
/// `step` column exists, only rows at the largest step are kept.
pub fn read_points<R: Read>(input: R) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let Some(first) = records.first() else {
        return Err(Error::Io("no points in input".into()));
    };
    let numeric = first.iter().all(|f| f.parse::<f64>().is_ok());
    let (cols, step_col, body) = if numeric {
        ((0..first.len()).collect::<Vec<_>>(), None, &records[..])
    } else {
        let cols: Vec<usize> = first
            .iter()
            .enumerate()
            .filter(|(_, name)| name.starts_with("theta_"))
            .map(|(i, _)| i)
            .collect();
        if cols.is_empty() {
            return Err(Error::Io("header has no theta_* columns".into()));
        }
        (cols, first.iter().position(|n| n == "step"), &records[1..])
    };
    let parse = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        let field = rec.get(i).unwrap_or("");
        field
            .parse::<f64>()
            .map_err(|_| Error::Io(format!("not a number: `{field}`")))
    };
    let last_step = match step_col {
        Some(c) => Some(body.iter().map(|r| parse(r, c)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::MIN, f64::max)),
        None => None,
    };
    let mut points = Vec::new();
    for rec in body {
        if let (Some(c), Some(last)) = (step_col, last_step) {
            if parse(rec, c)? != last {
                continue;
            }
        }
        for &c in &cols {
            points.push(parse(rec, c)?);
        }
    }
    SampleSet::new(cols.len(), points)
}
