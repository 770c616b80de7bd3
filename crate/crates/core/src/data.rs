//! Observation matrix, CSV ingestion, housekeeping normalization and
//! compartment rules.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::numfmt::fmt_sig;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input is empty")]
    Empty,
    #[error("header contains an empty variable name at column {0}")]
    EmptyName(usize),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount { row: usize, expected: usize, found: usize },
    #[error("row {row}, column `{column}`: cannot parse `{token}` as a number")]
    NotNumeric { row: usize, column: String, token: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("every row has at least one missing value")]
    AllRowsIncomplete,
    #[error("observation `{id}`: housekeeping value {value} after offset is not strictly positive")]
    NonPositiveHousekeeping { id: String, value: f64 },
    #[error("observation `{0}`: housekeeping value is missing")]
    MissingHousekeeping(String),
    #[error("k = {k} is out of range 1..={rows}")]
    KOutOfRange { k: usize, rows: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

/// M observations by N named variables, stored row-major.
///
/// Missing cells never expose a number: [`DataMatrix::get`] returns `None`
/// for them and every column accessor used by the analyses either skips or
/// rejects them.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    names: Vec<String>,
    ids: Vec<String>,
    values: Vec<f64>,
    missing: Vec<bool>,
    reference: Vec<bool>,
}

impl DataMatrix {
    /// Builds a complete matrix from rows. Observation ids default to the row index.
    pub fn from_rows<S: AsRef<str>>(names: &[S], rows: &[Vec<f64>]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        validate_names(&names)?;
        let n = names.len();
        let mut values = Vec::with_capacity(rows.len() * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(DataError::FieldCount { row: r, expected: n, found: row.len() });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NotNumeric { row: r, column: names[c].clone(), token: v.to_string() });
                }
            }
            values.extend_from_slice(row);
        }
        let m = rows.len();
        Ok(DataMatrix {
            ids: (0..m).map(|i| i.to_string()).collect(),
            missing: vec![false; m * n],
            reference: vec![false; n],
            names,
            values,
        })
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns<S: AsRef<str>>(names: &[S], columns: &[Vec<f64>]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(DataError::Shape(format!("{} names for {} columns", names.len(), columns.len())));
        }
        let m = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != m) {
            return Err(DataError::Shape(format!("column of length {} next to length {m}", c.len())));
        }
        let rows: Vec<Vec<f64>> = (0..m).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
        Self::from_rows(names, &rows)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n_rows() {
            return Err(DataError::Shape(format!("{} ids for {} rows", ids.len(), self.n_rows())));
        }
        self.ids = ids;
        Ok(self)
    }

    /// Marks a cell missing.
    pub fn with_missing(mut self, row: usize, col: usize) -> Self {
        let k = row * self.n_cols() + col;
        self.missing[k] = true;
        self.values[k] = f64::NAN;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.names
    }

    pub fn observation_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| DataError::UnknownVariable(name.to_string()))
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let k = row * self.n_cols() + col;
        (!self.missing[k]).then(|| self.values[k])
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_cols() + col]
    }

    pub fn row_is_complete(&self, row: usize) -> bool {
        let n = self.n_cols();
        !self.missing[row * n..(row + 1) * n].iter().any(|&m| m)
    }

    /// Column values with `None` for missing cells.
    pub fn column(&self, col: usize) -> Vec<Option<f64>> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    /// True for columns that analyses skip by default (e.g. a housekeeping gene
    /// after normalization).
    pub fn is_reference(&self, col: usize) -> bool {
        self.reference[col]
    }

    /// Variable names that are not reference columns.
    pub fn analysis_variables(&self) -> Vec<&str> {
        self.names.iter().zip(&self.reference).filter(|(_, &r)| !r).map(|(n, _)| n.as_str()).collect()
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let n = self.n_cols();
        let mut out = DataMatrix {
            names: self.names.clone(),
            ids: Vec::with_capacity(rows.len()),
            values: Vec::with_capacity(rows.len() * n),
            missing: Vec::with_capacity(rows.len() * n),
            reference: self.reference.clone(),
        };
        for &r in rows {
            out.ids.push(self.ids[r].clone());
            out.values.extend_from_slice(&self.values[r * n..(r + 1) * n]);
            out.missing.extend_from_slice(&self.missing[r * n..(r + 1) * n]);
        }
        out
    }

    /// Appends a derived column, e.g. a product of two covariates to sort by.
    pub fn with_column(mut self, name: &str, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(DataError::Shape(format!("{} values for {} rows", values.len(), self.n_rows())));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(DataError::DuplicateName(name.to_string()));
        }
        let n = self.n_cols();
        let mut vals = Vec::with_capacity(self.values.len() + self.n_rows());
        let mut miss = Vec::with_capacity(vals.capacity());
        for (r, v) in values.iter().enumerate() {
            vals.extend_from_slice(&self.values[r * n..(r + 1) * n]);
            miss.extend_from_slice(&self.missing[r * n..(r + 1) * n]);
            vals.push(v.unwrap_or(f64::NAN));
            miss.push(v.is_none());
        }
        self.values = vals;
        self.missing = miss;
        self.names.push(name.to_string());
        self.reference.push(false);
        Ok(self)
    }

    /// Writes the matrix as CSV with twelve significant digits; missing cells
    /// are written as `NA`.
    pub fn write_csv<W: Write>(&self, w: W, opts: &CsvOptions) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().delimiter(opts.delimiter).from_writer(w);
        let mut header: Vec<&str> = Vec::with_capacity(self.n_cols() + 1);
        if let Some(id) = &opts.id_column {
            header.push(id);
        }
        header.extend(self.names.iter().map(String::as_str));
        wtr.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            if opts.id_column.is_some() {
                rec.push(self.ids[r].clone());
            }
            rec.extend((0..self.n_cols()).map(|c| match self.get(r, c) {
                Some(v) => fmt_sig(v),
                None => "NA".to_string(),
            }));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, opts: &CsvOptions) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, opts).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn validate_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, n) in names.iter().enumerate() {
        if n.trim().is_empty() {
            return Err(DataError::EmptyName(i));
        }
        if !seen.insert(n.as_str()) {
            return Err(DataError::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Column holding observation ids instead of a numeric variable.
    pub id_column: Option<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', id_column: None }
    }
}

fn is_na(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Parses a CSV stream with a mandatory header row.
pub fn load_csv<R: Read>(source: R, opts: &CsvOptions) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(opts.delimiter).has_headers(false).flexible(true).from_reader(source);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(DataError::Empty),
    };
    let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(DataError::Empty);
    }
    validate_names(&header)?;
    let id_col = match &opts.id_column {
        Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| DataError::UnknownVariable(name.clone()))?),
        None => None,
    };
    let names: Vec<String> = header.iter().enumerate().filter(|(i, _)| Some(*i) != id_col).map(|(_, h)| h.clone()).collect();

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        // blank trailing lines are not observations
        if rec.len() == 1 && rec[0].trim().is_empty() && header.len() > 1 {
            continue;
        }
        if rec.len() != header.len() {
            return Err(DataError::FieldCount { row: r + 1, expected: header.len(), found: rec.len() });
        }
        let row_no = ids.len();
        ids.push(match id_col {
            Some(c) => rec[c].trim().to_string(),
            None => row_no.to_string(),
        });
        for (c, tok) in rec.iter().enumerate() {
            if Some(c) == id_col {
                continue;
            }
            if is_na(tok) {
                values.push(f64::NAN);
                missing.push(true);
                continue;
            }
            match tok.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    values.push(v);
                    missing.push(false);
                }
                _ => return Err(DataError::NotNumeric { row: r + 1, column: header[c].clone(), token: tok.to_string() }),
            }
        }
    }
    if ids.is_empty() {
        return Err(DataError::Empty);
    }
    let n = names.len();
    Ok(DataMatrix { reference: vec![false; n], names, ids, values, missing })
}

/// Result of [`drop_incomplete`].
#[derive(Debug, Clone)]
pub struct DropReport {
    pub matrix: DataMatrix,
    pub dropped: Vec<String>,
}

/// Removes every row with at least one missing cell.
pub fn drop_incomplete(d: &DataMatrix) -> Result<DropReport> {
    let (keep, drop): (Vec<usize>, Vec<usize>) = (0..d.n_rows()).partition(|&r| d.row_is_complete(r));
    if keep.is_empty() {
        return Err(DataError::AllRowsIncomplete);
    }
    Ok(DropReport { matrix: d.select_rows(&keep), dropped: drop.into_iter().map(|r| d.ids[r].clone()).collect() })
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizeOptions {
    /// Add the offset to the housekeeping value before dividing.
    pub offset_housekeeping: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { offset_housekeeping: true }
    }
}

/// Divides every cell of a row by that row's housekeeping value, after adding
/// a global offset: `v -> (v + offset) / (h + offset)`.
///
/// The housekeeping column is set to exactly 1 and flagged as a reference
/// column. With `offset_housekeeping = false` the divisor is the raw `h`.
pub fn normalize_housekeeping(d: &DataMatrix, housekeeping: &str, offset: f64, opts: NormalizeOptions) -> Result<DataMatrix> {
    let hk = d.column_index(housekeeping)?;
    let n = d.n_cols();
    let mut out = d.clone();
    for r in 0..d.n_rows() {
        let h = d.get(r, hk).ok_or_else(|| DataError::MissingHousekeeping(d.ids[r].clone()))?;
        let divisor = if opts.offset_housekeeping { h + offset } else { h };
        if divisor.is_nan() || divisor <= 0.0 {
            return Err(DataError::NonPositiveHousekeeping { id: d.ids[r].clone(), value: divisor });
        }
        for c in 0..n {
            let k = r * n + c;
            if out.missing[k] {
                continue;
            }
            out.values[k] = if c == hk { 1.0 } else { (d.values[k] + offset) / divisor };
        }
    }
    out.reference[hk] = true;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    /// Value strictly above the detection floor.
    Detected {
        floor: f64,
    },
    NotDetected {
        floor: f64,
    },
    /// The k largest values; ties broken by ascending row index.
    TopK(usize),
    /// The k smallest values; ties broken by ascending row index.
    BottomK(usize),
    /// Value strictly greater than the threshold.
    Above(f64),
    /// Value strictly less than the threshold.
    Below(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentRule {
    pub variable: String,
    pub kind: RuleKind,
}

impl CompartmentRule {
    pub fn new(variable: &str, kind: RuleKind) -> Self {
        CompartmentRule { variable: variable.to_string(), kind }
    }

    pub fn detected(variable: &str) -> Self {
        Self::new(variable, RuleKind::Detected { floor: 0.0 })
    }

    pub fn not_detected(variable: &str) -> Self {
        Self::new(variable, RuleKind::NotDetected { floor: 0.0 })
    }

    pub fn top_k(variable: &str, k: usize) -> Self {
        Self::new(variable, RuleKind::TopK(k))
    }

    pub fn bottom_k(variable: &str, k: usize) -> Self {
        Self::new(variable, RuleKind::BottomK(k))
    }

    /// Rows that satisfy this rule on its own. Rows missing the variable never match.
    pub fn matches(&self, d: &DataMatrix) -> Result<BTreeSet<usize>> {
        let col = d.column_index(&self.variable)?;
        let present = (0..d.n_rows()).filter_map(|r| d.get(r, col).map(|v| (r, v)));
        let set = match self.kind {
            RuleKind::Detected { floor } => present.filter(|&(_, v)| v > floor).map(|(r, _)| r).collect(),
            RuleKind::NotDetected { floor } => present.filter(|&(_, v)| v <= floor).map(|(r, _)| r).collect(),
            RuleKind::Above(t) => present.filter(|&(_, v)| v > t).map(|(r, _)| r).collect(),
            RuleKind::Below(t) => present.filter(|&(_, v)| v < t).map(|(r, _)| r).collect(),
            RuleKind::TopK(k) | RuleKind::BottomK(k) => {
                if k == 0 || k > d.n_rows() {
                    return Err(DataError::KOutOfRange { k, rows: d.n_rows() });
                }
                let mut ranked: Vec<(usize, f64)> = present.collect();
                let top = matches!(self.kind, RuleKind::TopK(_));
                ranked.sort_by(|a, b| {
                    let ord = if top { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
                    ord.then(a.0.cmp(&b.0))
                });
                ranked.into_iter().take(k).map(|(r, _)| r).collect()
            }
        };
        Ok(set)
    }
}

/// Rows satisfying every rule. Each rule is evaluated against the full matrix,
/// so `top_k` ranks over all rows rather than over rows admitted by earlier rules.
pub fn apply_compartment(d: &DataMatrix, rules: &[CompartmentRule]) -> Result<BTreeSet<usize>> {
    let mut acc: BTreeSet<usize> = (0..d.n_rows()).collect();
    for rule in rules {
        let m = rule.matches(d)?;
        acc.retain(|r| m.contains(r));
    }
    Ok(acc)
}

/// Complement of a row set within the matrix.
pub fn complement(d: &DataMatrix, set: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..d.n_rows()).filter(|r| !set.contains(r)).collect()
}
