//! Machine-readable experiment reports.
//!
//! Both formats carry the same columns in the same order. JSON wraps the rows
//! as `{"schema_version": 1, "rows": [...]}`; CSV has a header line and no
//! version. A perfect recovery has PSNR `"inf"`; runs without ground truth leave
//! `psnr` and `relative_error` empty (`null` in JSON).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// A PSNR value that serializes `+∞` as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Psnr(pub f64);

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub input: String,
    pub method: String,
    pub r: usize,
    pub missing_rate: f64,
    pub seed: u64,
    pub psnr: Option<Psnr>,
    pub relative_error: Option<f64>,
    pub outer_iters: Option<usize>,
    pub inner_iters: Option<usize>,
    pub converged: Option<bool>,
    pub seconds: Option<f64>,
    /// Highest PSNR among the rows of the same input.
    pub best: bool,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Sorts rows by input, method and r, then flags the best r per input.
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| (&a.input, &a.method, a.r).cmp(&(&b.input, &b.method, b.r)));
        mark_best(&mut rows);
        Self {
            schema_version: SCHEMA_VERSION,
            rows,
        }
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(ReportRow::failed)
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let w = BufWriter::new(file);
        match format {
            ReportFormat::Json => serde_json::to_writer_pretty(w, self)?,
            ReportFormat::Csv => {
                let mut w = csv::Writer::from_writer(w);
                for row in &self.rows {
                    w.serialize(row)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn mark_best(rows: &mut [ReportRow]) {
    let mut start = 0;
    while start < rows.len() {
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.input == rows[start].input)
                .count();
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in rows[start..end].iter().enumerate() {
            if let Some(Psnr(p)) = row.psnr {
                if best.is_none_or(|(_, b)| p > b) {
                    best = Some((start + i, p));
                }
            }
        }
        if let Some((i, _)) = best {
            rows[i].best = true;
        }
        start = end;
    }
}
