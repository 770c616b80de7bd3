//! Pearson and Spearman correlation with a two-sided t-test p-value.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    Insufficient { needed: usize, got: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("correlation {0} outside [-1, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Pearson,
    Spearman,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Method::Pearson),
            "spearman" => Ok(Method::Spearman),
            other => Err(format!("unknown method `{other}` (expected pearson or spearman)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    /// Coefficient in [-1, 1]; 0 when `defined` is false.
    pub r: f64,
    pub n: usize,
    /// Two-sided p-value in (0, 1]. 1 when undefined or when n = 2.
    pub p_value: f64,
    pub method: Method,
    /// False when either input has zero variance.
    pub defined: bool,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<(), CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::Insufficient { needed: 2, got: x.len() });
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(CorrelationError::NonFinite(i));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Two-pass Pearson coefficient over validated input; `None` if a variance is zero.
fn pearson_coefficient(x: &[f64], y: &[f64]) -> Option<f64> {
    if is_constant(x) || is_constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn finish(r: Option<f64>, n: usize, method: Method) -> CorrelationResult {
    match r {
        Some(r) => CorrelationResult {
            r,
            n,
            p_value: if n >= 3 { significance(r, n).expect("n >= 3 and |r| <= 1") } else { 1.0 },
            method,
            defined: true,
        },
        None => CorrelationResult { r: 0.0, n, p_value: 1.0, method, defined: false },
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, CorrelationError> {
    check_inputs(x, y)?;
    Ok(finish(pearson_coefficient(x, y), x.len(), Method::Pearson))
}

/// Pearson correlation of the rank-transformed inputs (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, CorrelationError> {
    check_inputs(x, y)?;
    let (rx, ry) = (ranks(x), ranks(y));
    Ok(finish(pearson_coefficient(&rx, &ry), x.len(), Method::Spearman))
}

pub fn correlate(x: &[f64], y: &[f64], method: Method) -> Result<CorrelationResult, CorrelationError> {
    match method {
        Method::Pearson => pearson(x, y),
        Method::Spearman => spearman(x, y),
    }
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean of (i+1)..=j
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = rank;
        }
        i = j;
    }
    out
}

/// Two-sided p-value of the t-test for zero correlation, with
/// `t = r * sqrt((n - 2) / (1 - r^2))` on `n - 2` degrees of freedom.
///
/// Evaluated as the regularized incomplete beta `I_{1-r^2}((n-2)/2, 1/2)`,
/// which equals `P(|T| >= |t|)`. Returns the smallest positive double when
/// the tail underflows, including `|r| = 1`.
pub fn significance(r: f64, n: usize) -> Result<f64, CorrelationError> {
    if n < 3 {
        return Err(CorrelationError::Insufficient { needed: 3, got: n });
    }
    if r.is_nan() || r.abs() > 1.0 {
        return Err(CorrelationError::OutOfRange(r));
    }
    let a = r.abs();
    let x = (1.0 - a) * (1.0 + a);
    if x <= 0.0 {
        return Ok(f64::from_bits(1));
    }
    let df = (n - 2) as f64;
    let p = beta_reg(df / 2.0, 0.5, x.min(1.0));
    Ok(if p > 0.0 { p.min(1.0) } else { f64::from_bits(1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_lines() {
        assert_eq!(pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap().r, 1.0);
        assert_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap().r, -1.0);
        assert_eq!(spearman(&[1., 2., 3.], &[1., 4., 9.]).unwrap().r, 1.0);
        assert_eq!(spearman(&[1., 2., 3.], &[9., 4., 1.]).unwrap().r, -1.0);
    }

    #[test]
    fn hand_computed_values() {
        // centered: (-1.5,-.5,.5,1.5) and (-1.5,.5,-.5,1.5); Sxy = 4, Sxx = Syy = 5
        let r = pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap();
        assert!((r.r - 0.8).abs() < 1e-15);
        // df = 2 admits p = 1 - |r| in closed form
        assert!((r.p_value - 0.2).abs() < 1e-12);
        // ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): Sxy = 4.5, Sxx = 4.5, Syy = 5
        let s = spearman(&[1., 2., 2., 4.], &[1., 3., 2., 4.]).unwrap();
        assert!((s.r - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(ranks(&[1., 2., 2., 4.]), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(ranks(&[3., 3., 3.]), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn degenerate_inputs() {
        let c = pearson(&[1., 1., 1.], &[1., 2., 3.]).unwrap();
        assert!(!c.defined);
        assert_eq!((c.r, c.p_value), (0.0, 1.0));
        assert!(!spearman(&[1., 2., 3.], &[5., 5., 5.]).unwrap().defined);
        let two = pearson(&[1., 2.], &[3., 1.]).unwrap();
        assert_eq!((two.r, two.p_value), (-1.0, 1.0));
        assert_eq!(pearson(&[1., 2.], &[1.]).unwrap_err(), CorrelationError::LengthMismatch(2, 1));
        assert!(matches!(pearson(&[1.], &[1.]), Err(CorrelationError::Insufficient { .. })));
        assert_eq!(pearson(&[1., f64::NAN], &[1., 2.]).unwrap_err(), CorrelationError::NonFinite(1));
    }

    #[test]
    fn significance_edges() {
        for n in [3, 10, 500] {
            assert_eq!(significance(0.0, n).unwrap(), 1.0);
            assert_eq!(significance(1.0, n).unwrap(), f64::from_bits(1));
            assert_eq!(significance(-1.0, n).unwrap(), f64::from_bits(1));
        }
        assert!(significance(0.99, 50).unwrap() < 1e-10);
        assert!(matches!(significance(0.5, 2), Err(CorrelationError::Insufficient { .. })));
        assert!(matches!(significance(1.5, 10), Err(CorrelationError::OutOfRange(_))));
        // df = 1 is the Cauchy distribution: p = 1 - (2/pi) atan|t|
        let r: f64 = 0.6;
        let t = r / (1.0 - r * r).sqrt();
        let cauchy = 1.0 - 2.0 / std::f64::consts::PI * t.atan();
        assert!((significance(r, 3).unwrap() - cauchy).abs() < 1e-13);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("Spearman".parse::<Method>().unwrap(), Method::Spearman);
        assert!("kendall".parse::<Method>().is_err());
        assert_eq!(Method::Pearson.to_string(), "pearson");
    }
}
