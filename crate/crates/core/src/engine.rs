//! Quantile-window subpopulations and the multiresolution correlation grid.
//!
//! A window is addressed by its center quantile `alpha` and half-width `beta`
//! and covers the quantiles `[alpha - beta, alpha + beta]` of the sorting
//! variable. Membership is defined on ranks: with `m` active rows sorted by
//! the sorting value (ties by row index), the window holds 1-based ranks
//! `floor((alpha - beta) * m) + 1 ..= round((alpha + beta) * m)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::correlation::{correlate, CorrelationError, CorrelationResult, Method};
use crate::data::{DataError, DataMatrix};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("window alpha = {alpha}, beta = {beta} does not lie inside [0, 1]")]
    InvalidWindow { alpha: f64, beta: f64 },
    #[error("window contains no observations")]
    EmptyWindow,
    #[error("no active observations")]
    EmptyActiveSet,
    #[error("observation index {index} out of range (dataset has {rows} rows)")]
    IndexOutOfRange { index: usize, rows: usize },
    #[error("resolution {resolution} out of range 2..={max}")]
    Resolution { resolution: usize, max: usize },
    #[error("variables must be distinct, `{0}` used twice")]
    RepeatedVariable(String),
    #[error("min_members must be at least 3, got {0}")]
    MinMembers(usize),
    #[error("p threshold {0} outside [0, 1]")]
    Threshold(f64),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// Ascending, duplicate-free row indices taking part in an analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    pub fn all(rows: usize) -> Self {
        ActiveSet((0..rows).collect())
    }

    /// All rows except the excluded ones.
    pub fn excluding(rows: usize, excluded: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut keep = vec![true; rows];
        for i in excluded {
            if i >= rows {
                return Err(EngineError::IndexOutOfRange { index: i, rows });
            }
            keep[i] = false;
        }
        Ok(ActiveSet((0..rows).filter(|&i| keep[i]).collect()))
    }

    pub fn from_indices(rows: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        if let Some(&i) = v.iter().find(|&&i| i >= rows) {
            return Err(EngineError::IndexOutOfRange { index: i, rows });
        }
        v.sort_unstable();
        v.dedup();
        Ok(ActiveSet(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops rows with a missing value in any of the given columns.
    fn complete_in(&self, d: &DataMatrix, cols: &[usize]) -> ActiveSet {
        ActiveSet(self.0.iter().copied().filter(|&r| cols.iter().all(|&c| !d.is_missing(r, c))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubpopulationWindow {
    pub sorting_variable: String,
    pub alpha: f64,
    pub beta: f64,
    /// Member row indices, ascending.
    pub members: Vec<usize>,
    pub median_sorting_value: f64,
}

const WINDOW_TOL: f64 = 1e-12;

fn check_window(alpha: f64, beta: f64) -> Result<()> {
    let ok = alpha.is_finite()
        && beta.is_finite()
        && beta > 0.0
        && beta <= 0.5 + WINDOW_TOL
        && alpha >= beta - WINDOW_TOL
        && alpha <= 1.0 - beta + WINDOW_TOL;
    if ok {
        Ok(())
    } else {
        Err(EngineError::InvalidWindow { alpha, beta })
    }
}

/// Snaps `x` to the nearest multiple of 1/2 when it is within rounding noise,
/// so products like `0.1 * 10` floor and round as the exact rational would.
fn snap_half(x: f64) -> f64 {
    let y = 2.0 * x;
    let ry = y.round();
    if (y - ry).abs() <= 1e-9 * ry.abs().max(1.0) {
        ry / 2.0
    } else {
        x
    }
}

/// 1-based inclusive rank bounds of a window over `m` rows (may be empty: lo > hi).
pub fn rank_bounds(alpha: f64, beta: f64, m: usize) -> (usize, usize) {
    let mf = m as f64;
    let lo = snap_half((alpha - beta) * mf).floor().max(0.0) as usize + 1;
    let hi = (snap_half((alpha + beta) * mf) + 0.5).floor().max(0.0) as usize;
    (lo.max(1), hi.min(m))
}

/// Exact rank bounds for `alpha = a / res`, `beta = b / res`.
pub fn rank_bounds_exact(a: usize, b: usize, res: usize, m: usize) -> (usize, usize) {
    let lo = (a - b) * m / res + 1;
    let hi = (2 * (a + b) * m + res) / (2 * res);
    (lo.max(1), hi.min(m))
}

/// Active rows ordered by sorting value, ties by row index.
struct SortedRows {
    rows: Vec<usize>,
    values: Vec<f64>,
}

impl SortedRows {
    fn new(d: &DataMatrix, s: usize, active: &ActiveSet) -> Self {
        let mut rows: Vec<usize> = active.indices().to_vec();
        let value = |r: usize| d.get(r, s).expect("active rows are complete in s");
        // `rows` is ascending, so a stable sort keeps index order among ties
        rows.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let values = rows.iter().map(|&r| value(r)).collect();
        SortedRows { rows, values }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Members (ascending row index) and median sorting value of ranks lo..=hi.
    fn window(&self, lo: usize, hi: usize) -> Option<(Vec<usize>, f64)> {
        if lo > hi || hi == 0 {
            return None;
        }
        let mut members = self.rows[lo - 1..hi].to_vec();
        members.sort_unstable();
        Some((members, median_sorted(&self.values[lo - 1..hi])))
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Resolves the window `(alpha, beta)` of sorting variable `s` on the active
/// rows. Rows with a missing sorting value are not ranked.
pub fn resolve_window(d: &DataMatrix, s: &str, alpha: f64, beta: f64, active: &ActiveSet) -> Result<SubpopulationWindow> {
    check_window(alpha, beta)?;
    let sc = d.column_index(s)?;
    if let Some(&i) = active.indices().iter().find(|&&i| i >= d.n_rows()) {
        return Err(EngineError::IndexOutOfRange { index: i, rows: d.n_rows() });
    }
    let active = active.complete_in(d, &[sc]);
    if active.is_empty() {
        return Err(EngineError::EmptyActiveSet);
    }
    let sorted = SortedRows::new(d, sc, &active);
    let (lo, hi) = rank_bounds(alpha, beta, sorted.len());
    let (members, median) = sorted.window(lo, hi).ok_or(EngineError::EmptyWindow)?;
    Ok(SubpopulationWindow { sorting_variable: s.to_string(), alpha, beta, members, median_sorting_value: median })
}

fn extract(d: &DataMatrix, col: usize, rows: &[usize]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|&r| {
            d.get(r, col).ok_or_else(|| {
                EngineError::Data(DataError::Shape(format!(
                    "observation `{}` has no value for `{}`",
                    d.observation_ids()[r],
                    d.variable_names()[col]
                )))
            })
        })
        .collect()
}

/// Correlation of columns `i` and `j` restricted to the window's members.
pub fn subpopulation_correlation(
    d: &DataMatrix,
    window: &SubpopulationWindow,
    i: &str,
    j: &str,
    method: Method,
) -> Result<CorrelationResult> {
    let (ic, jc) = (d.column_index(i)?, d.column_index(j)?);
    let x = extract(d, ic, &window.members)?;
    let y = extract(d, jc, &window.members)?;
    Ok(correlate(&x, &y, method)?)
}

/// Correlation of `i` and `j` over every active row complete in both.
pub fn population_correlation(d: &DataMatrix, i: &str, j: &str, method: Method, active: &ActiveSet) -> Result<CorrelationResult> {
    let (ic, jc) = (d.column_index(i)?, d.column_index(j)?);
    let rows = active.complete_in(d, &[ic, jc]);
    let x = extract(d, ic, rows.indices())?;
    let y = extract(d, jc, rows.indices())?;
    Ok(correlate(&x, &y, method)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub resolution: usize,
    pub method: Method,
    pub p_threshold: f64,
    pub min_members: usize,
}

impl GridConfig {
    pub fn new(resolution: usize) -> Self {
        GridConfig { resolution, ..Default::default() }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { resolution: 21, method: Method::Pearson, p_threshold: 0.05, min_members: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McaCell {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    /// `None` when omitted or when a variance in the window is zero.
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
    pub median_sorting_value: f64,
    pub omitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McaGrid {
    pub resolution: usize,
    pub sorting_variable: String,
    pub x: String,
    pub y: String,
    pub method: Method,
    pub p_threshold: f64,
    pub min_members: usize,
    pub total_observations: usize,
    /// Sorted by (beta, alpha).
    pub cells: Vec<McaCell>,
}

impl McaGrid {
    /// The whole-population cell (alpha = beta = 1/2).
    pub fn full_population(&self) -> Option<&McaCell> {
        self.cells.iter().find(|c| c.alpha == 0.5 && c.beta == 0.5)
    }
}

/// `(a, b)` numerator pairs of the lattice `alpha = a/R, beta = b/R`:
/// `b = 1..=R/2`, `a = b..=R-b`, followed by the full-population cell when
/// the lattice does not already contain it (odd `R`). The full cell is
/// reported as `None`.
pub fn lattice(resolution: usize) -> Vec<Option<(usize, usize)>> {
    let mut out = Vec::new();
    for b in 1..=resolution / 2 {
        for a in b..=resolution - b {
            out.push(Some((a, b)));
        }
    }
    if resolution % 2 == 1 {
        out.push(None);
    }
    out
}

/// Computes the correlation of `i` and `j` over every lattice window of `s`.
///
/// Active rows missing `s`, `i` or `j` are dropped before ranking, so
/// `total_observations` counts complete rows only.
pub fn build_grid(d: &DataMatrix, s: &str, i: &str, j: &str, cfg: &GridConfig, active: &ActiveSet) -> Result<McaGrid> {
    let sc = d.column_index(s)?;
    let ic = d.column_index(i)?;
    let jc = d.column_index(j)?;
    if s == i || s == j {
        return Err(EngineError::RepeatedVariable(s.to_string()));
    }
    if i == j {
        return Err(EngineError::RepeatedVariable(i.to_string()));
    }
    if cfg.min_members < 3 {
        return Err(EngineError::MinMembers(cfg.min_members));
    }
    if !(0.0..=1.0).contains(&cfg.p_threshold) {
        return Err(EngineError::Threshold(cfg.p_threshold));
    }
    if let Some(&r) = active.indices().iter().find(|&&r| r >= d.n_rows()) {
        return Err(EngineError::IndexOutOfRange { index: r, rows: d.n_rows() });
    }
    let active = active.complete_in(d, &[sc, ic, jc]);
    let m = active.len();
    let res = cfg.resolution;
    if res < 2 || res > m {
        return Err(EngineError::Resolution { resolution: res, max: m });
    }
    let sorted = SortedRows::new(d, sc, &active);
    let xs: Vec<f64> = (0..d.n_rows()).map(|r| d.get(r, ic).unwrap_or(f64::NAN)).collect();
    let ys: Vec<f64> = (0..d.n_rows()).map(|r| d.get(r, jc).unwrap_or(f64::NAN)).collect();

    let cells = lattice(res)
        .into_par_iter()
        .map(|coord| {
            let (alpha, beta, lo, hi) = match coord {
                Some((a, b)) => {
                    let (lo, hi) = rank_bounds_exact(a, b, res, m);
                    (a as f64 / res as f64, b as f64 / res as f64, lo, hi)
                }
                None => (0.5, 0.5, 1, m),
            };
            let (members, median) = sorted.window(lo, hi).expect("lattice windows hold >= 2 ranks");
            evaluate_cell(&xs, &ys, alpha, beta, &members, median, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(McaGrid {
        resolution: res,
        sorting_variable: s.to_string(),
        x: i.to_string(),
        y: j.to_string(),
        method: cfg.method,
        p_threshold: cfg.p_threshold,
        min_members: cfg.min_members,
        total_observations: m,
        cells,
    })
}

fn evaluate_cell(xs: &[f64], ys: &[f64], alpha: f64, beta: f64, members: &[usize], median: f64, cfg: &GridConfig) -> Result<McaCell> {
    let n = members.len();
    let mut cell =
        McaCell { alpha, beta, n, r: None, p_value: None, significant: false, median_sorting_value: median, omitted: n < cfg.min_members };
    if cell.omitted {
        return Ok(cell);
    }
    let x: Vec<f64> = members.iter().map(|&r| xs[r]).collect();
    let y: Vec<f64> = members.iter().map(|&r| ys[r]).collect();
    let c = correlate(&x, &y, cfg.method)?;
    if c.defined {
        cell.r = Some(c.r);
        cell.p_value = Some(c.p_value);
        cell.significant = c.p_value <= cfg.p_threshold;
    }
    Ok(cell)
}
