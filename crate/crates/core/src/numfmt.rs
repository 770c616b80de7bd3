//! Decimal formatting shared by every text export (CSV, JSON, SVG attributes).
//!
//! Values are rounded to [`SIGNIFICANT_DIGITS`] significant digits and then
//! printed in the shortest form that parses back to the rounded value.

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `v` to twelve significant digits. Non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    s.parse().unwrap_or(v)
}

/// Formats `v` with twelve significant digits, without trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(v);
    if r == 0.0 {
        return "0".to_string();
    }
    let mag = r.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}
