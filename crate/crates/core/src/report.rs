//! Per-level tables, fitted constants and their CSV rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier written into every JSON report.
pub const REPORT_SCHEMA: &str = "favard-lab/report/v1";

/// One level of a report. Quantities that are not defined for the model are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: u32,
    pub favard: f64,
    pub favard_error: f64,
    pub median: f64,
    pub reciprocal_integral: f64,
    pub total_overlap: Option<f64>,
    pub energy: Option<f64>,
    pub bucket_max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: u32,
    pub n_times_favard: f64,
}

/// Constants extracted from the rows with `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    /// `min n·Fav(n) / ln n`.
    pub c_lower: f64,
    /// `max total_overlap(n) / n`.
    pub c_pairsum: Option<f64>,
    /// `max energy(n) / n`.
    pub c_energy: Option<f64>,
    /// `max A_{j,k} / 4^(2n-k-2j)`.
    pub c_bucket: Option<f64>,
    /// `n·Fav(n)` for every row, including `n < 2`.
    pub trend: Vec<TrendPoint>,
}

fn fold_max(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().reduce(f64::max)
}

/// Min/max extraction over the rows. Each constant only depends on rows
/// already seen, so adding a level never changes earlier contributions.
pub fn fit_constants(rows: &[LevelRow]) -> Result<Fits> {
    let fitted: Vec<&LevelRow> = rows.iter().filter(|r| r.n >= 2).collect();
    if fitted.len() < 2 {
        return Err(Error::InsufficientData { got: fitted.len() });
    }
    let c_lower = fitted
        .iter()
        .map(|r| r.n as f64 * r.favard / (r.n as f64).ln())
        .fold(f64::INFINITY, f64::min);
    let per_n = |f: fn(&LevelRow) -> Option<f64>| {
        fold_max(fitted.iter().map(|r| f(r).map(|v| v / r.n as f64)))
    };
    Ok(Fits {
        c_lower,
        c_pairsum: per_n(|r| r.total_overlap),
        c_energy: per_n(|r| r.energy),
        c_bucket: fold_max(fitted.iter().map(|r| r.bucket_max_ratio)),
        trend: rows
            .iter()
            .map(|r| TrendPoint {
                n: r.n,
                n_times_favard: r.n as f64 * r.favard,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub model: String,
    pub seed: u64,
    /// Logarithm used in `c_lower`.
    pub log_base: String,
    pub rows: Vec<LevelRow>,
    pub fits: Fits,
}

impl Report {
    pub fn new(model: String, seed: u64, rows: Vec<LevelRow>) -> Result<Self> {
        let fits = fit_constants(&rows)?;
        Ok(Self {
            schema: REPORT_SCHEMA.to_string(),
            model,
            seed,
            log_base: "e".to_string(),
            rows,
            fits,
        })
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Reals in scientific notation with 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// A named table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Rows as JSON objects keyed by column name.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let v = match v {
                            Cell::Int(i) => serde_json::Value::from(*i),
                            Cell::Real(x) => serde_json::Value::from(*x),
                            Cell::Text(s) => serde_json::Value::from(s.clone()),
                            Cell::Empty => serde_json::Value::Null,
                        };
                        (c.clone(), v)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// The per-level table of a report.
pub fn level_table(report: &Report) -> Table {
    let mut t = Table::new(
        "levels",
        &[
            "model",
            "n",
            "favard",
            "error",
            "median",
            "reciprocal_integral",
            "total_overlap",
            "energy",
            "bucket_max_ratio",
            "n_times_favard",
        ],
    );
    for r in &report.rows {
        t.push(vec![
            report.model.as_str().into(),
            r.n.into(),
            r.favard.into(),
            r.favard_error.into(),
            r.median.into(),
            r.reciprocal_integral.into(),
            r.total_overlap.into(),
            r.energy.into(),
            r.bucket_max_ratio.into(),
            (r.n as f64 * r.favard).into(),
        ]);
    }
    t
}

/// The fits block as a one-row table.
pub fn fits_table(report: &Report) -> Table {
    let mut t = Table::new(
        "fits",
        &["model", "c_lower", "c_pairsum", "c_energy", "c_bucket", "log_base"],
    );
    let f = &report.fits;
    t.push(vec![
        report.model.as_str().into(),
        f.c_lower.into(),
        f.c_pairsum.into(),
        f.c_energy.into(),
        f.c_bucket.into(),
        report.log_base.as_str().into(),
    ]);
    t
}
