//! Exported grid records.
//!
//! CSV columns are `alpha,beta,n,median_s,r,p,significant,omitted`, one row
//! per cell ordered by `(beta, alpha)`. `r` and `p` are empty for omitted
//! cells and for windows where a variance is zero. JSON uses the same field
//! names. All reals carry twelve significant digits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlation::Method;
use crate::engine::{McaCell, McaGrid};
use crate::numfmt::{fmt_sig, round_sig};

pub const GRID_COLUMNS: [&str; 8] = ["alpha", "beta", "n", "median_s", "r", "p", "significant", "omitted"];

#[derive(Debug, Error)]
pub enum GridIoError {
    #[error("grid csv header must be `{}`", GRID_COLUMNS.join(","))]
    Header,
    #[error("grid csv row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("grid csv has no cells")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One cell as exchanged over CSV or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub median_s: f64,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
    pub omitted: bool,
}

impl From<&McaCell> for CellRecord {
    fn from(c: &McaCell) -> Self {
        CellRecord {
            alpha: round_sig(c.alpha),
            beta: round_sig(c.beta),
            n: c.n,
            median_s: round_sig(c.median_sorting_value),
            r: c.r.map(round_sig),
            p: c.p_value.map(round_sig),
            significant: c.significant,
            omitted: c.omitted,
        }
    }
}

impl From<&CellRecord> for McaCell {
    fn from(r: &CellRecord) -> Self {
        McaCell {
            alpha: r.alpha,
            beta: r.beta,
            n: r.n,
            r: r.r,
            p_value: r.p,
            significant: r.significant,
            median_sorting_value: r.median_s,
            omitted: r.omitted,
        }
    }
}

pub fn records(grid: &McaGrid) -> Vec<CellRecord> {
    grid.cells.iter().map(CellRecord::from).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

pub fn write_grid_csv<W: Write>(grid: &McaGrid, w: W) -> Result<(), GridIoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(GRID_COLUMNS)?;
    for c in &grid.cells {
        wtr.write_record([
            fmt_sig(c.alpha),
            fmt_sig(c.beta),
            c.n.to_string(),
            fmt_sig(c.median_sorting_value),
            opt(c.r),
            opt(c.p_value),
            c.significant.to_string(),
            c.omitted.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn grid_csv_string(grid: &McaGrid) -> String {
    let mut buf = Vec::new();
    write_grid_csv(grid, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Names and settings a grid CSV does not carry.
#[derive(Debug, Clone)]
pub struct GridLabels {
    pub sorting_variable: String,
    pub x: String,
    pub y: String,
    pub method: Method,
    pub p_threshold: f64,
    pub min_members: usize,
}

impl Default for GridLabels {
    fn default() -> Self {
        GridLabels {
            sorting_variable: "s".into(),
            x: "x".into(),
            y: "y".into(),
            method: Method::Pearson,
            p_threshold: 0.05,
            min_members: 3,
        }
    }
}

/// Reads a grid CSV back into a grid. The resolution is recovered from the
/// smallest `beta` (= 1/R) and the population size from the largest `n`.
pub fn read_grid_csv<R: Read>(src: R, labels: &GridLabels) -> Result<McaGrid, GridIoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(src);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(GRID_COLUMNS) {
        return Err(GridIoError::Header);
    }
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let err = |msg: String| GridIoError::Row { row, msg };
        let real = |k: usize| -> Result<f64, GridIoError> {
            rec[k].trim().parse::<f64>().map_err(|_| err(format!("`{}` is not a number in {}", &rec[k], GRID_COLUMNS[k])))
        };
        let opt_real = |k: usize| -> Result<Option<f64>, GridIoError> {
            if rec[k].trim().is_empty() {
                Ok(None)
            } else {
                real(k).map(Some)
            }
        };
        let flag = |k: usize| -> Result<bool, GridIoError> {
            rec[k].trim().parse::<bool>().map_err(|_| err(format!("`{}` is not a boolean in {}", &rec[k], GRID_COLUMNS[k])))
        };
        let rec_cell = CellRecord {
            alpha: real(0)?,
            beta: real(1)?,
            n: rec[2].trim().parse().map_err(|_| err(format!("`{}` is not a count", &rec[2])))?,
            median_s: real(3)?,
            r: opt_real(4)?,
            p: opt_real(5)?,
            significant: flag(6)?,
            omitted: flag(7)?,
        };
        if !(rec_cell.beta > 0.0 && rec_cell.beta <= 0.5) {
            return Err(err(format!("beta {} outside (0, 0.5]", rec_cell.beta)));
        }
        if let Some(r) = rec_cell.r {
            if !(-1.0..=1.0).contains(&r) {
                return Err(err(format!("r {r} outside [-1, 1]")));
            }
        }
        cells.push(McaCell::from(&rec_cell));
    }
    if cells.is_empty() {
        return Err(GridIoError::Empty);
    }
    let min_beta = cells.iter().map(|c| c.beta).fold(f64::INFINITY, f64::min);
    let total = cells.iter().map(|c| c.n).max().unwrap_or(0);
    Ok(McaGrid {
        resolution: (1.0 / min_beta).round() as usize,
        sorting_variable: labels.sorting_variable.clone(),
        x: labels.x.clone(),
        y: labels.y.clone(),
        method: labels.method,
        p_threshold: labels.p_threshold,
        min_members: labels.min_members,
        total_observations: total,
        cells,
    })
}
