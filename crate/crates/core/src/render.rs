//! SVG output for MCA plots and scatter plots.
//!
//! Output is a pure function of its inputs: numbers are printed with fixed
//! precision and elements are emitted in input order, so identical inputs
//! give byte-identical documents.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::data::{DataError, DataMatrix};
use crate::engine::{McaCell, McaGrid};
use crate::numfmt::{fmt_sig, round_sig};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("grid has no drawable cells (all omitted)")]
    NothingToDraw,
    #[error("invalid color `{0}` (expected #rrggbb)")]
    Color(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
        let ch = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round().clamp(0.0, 255.0) as u8;
        Rgb(ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
    }
}

impl std::str::FromStr for Rgb {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let h = s.strip_prefix('#').unwrap_or(s);
        if h.len() != 6 || !h.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(RenderError::Color(s.to_string()));
        }
        let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).expect("validated hex");
        Ok(Rgb(byte(0), byte(2), byte(4)))
    }
}

/// Linear two-sided color scale over r in [-1, 1] with a fixed midpoint at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivergingColormap {
    pub negative: Rgb,
    pub midpoint: Rgb,
    pub positive: Rgb,
}

impl Default for DivergingColormap {
    /// Positive correlation blue, negative red.
    fn default() -> Self {
        DivergingColormap { negative: Rgb(0xb2, 0x18, 0x2b), midpoint: Rgb::WHITE, positive: Rgb(0x21, 0x66, 0xac) }
    }
}

impl DivergingColormap {
    pub fn map(&self, r: f64) -> Rgb {
        let t = r.clamp(-1.0, 1.0);
        if t >= 0.0 {
            Rgb::lerp(self.midpoint, self.positive, t)
        } else {
            Rgb::lerp(self.midpoint, self.negative, -t)
        }
    }

    /// The same map with its endpoints exchanged.
    pub fn swapped(&self) -> Self {
        DivergingColormap { negative: self.positive, midpoint: self.midpoint, positive: self.negative }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbscissaMode {
    /// Window center quantile alpha.
    #[default]
    Quantile,
    /// Median sorting value of the window members.
    MedianValue,
}

impl std::str::FromStr for AbscissaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quantile" => Ok(AbscissaMode::Quantile),
            "median" | "median_value" | "median-value" => Ok(AbscissaMode::MedianValue),
            other => Err(format!("unknown abscissa `{other}` (expected quantile or median)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub colormap: DivergingColormap,
    pub insignificant_color: Rgb,
    pub abscissa: AbscissaMode,
    /// Marker edge in pixels; by default cells tile the plot in quantile mode.
    pub marker_size: Option<f64>,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub title: Option<String>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 640,
            height: 480,
            colormap: DivergingColormap::default(),
            insignificant_color: Rgb::WHITE,
            abscissa: AbscissaMode::Quantile,
            marker_size: None,
            x_label: None,
            y_label: None,
            title: None,
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const AXIS_COLOR: &str = "#333333";
const CELL_STROKE: &str = "#d0d0d0";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn opt_attr(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn at(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

/// Roughly five round tick values covering [lo, hi].
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| round_sig(k as f64 * step)).collect()
}

fn padded_domain(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

struct Frame {
    width: f64,
    height: f64,
    x: Scale,
    y: Scale,
}

impl Frame {
    fn new(width: u32, height: u32, xd: (f64, f64), yd: (f64, f64)) -> Self {
        let (w, h) = (width as f64, height as f64);
        Frame {
            width: w,
            height: h,
            x: Scale { d0: xd.0, d1: xd.1, p0: MARGIN_LEFT, p1: w - MARGIN_RIGHT },
            y: Scale { d0: yd.0, d1: yd.1, p0: h - MARGIN_BOTTOM, p1: MARGIN_TOP },
        }
    }

    fn plot_width(&self) -> f64 {
        self.x.p1 - self.x.p0
    }

    fn plot_height(&self) -> f64 {
        self.y.p0 - self.y.p1
    }

    fn open(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">
<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##,
            w = self.width,
            h = self.height
        );
    }

    fn axes(&self, out: &mut String, xticks: &[f64], yticks: &[f64], xlabel: &str, ylabel: &str, title: &str) {
        let (x0, x1, y0, y1) = (self.x.p0, self.x.p1, self.y.p0, self.y.p1);
        out.push_str("<g class=\"axes\">\n");
        let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="{AXIS_COLOR}"/>"#);
        let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="{AXIS_COLOR}"/>"#);
        for &t in xticks {
            let px = self.x.at(t);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="{AXIS_COLOR}"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                fmt_sig(t)
            );
        }
        for &t in yticks {
            let py = self.y.at(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="{AXIS_COLOR}"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                fmt_sig(t)
            );
        }
        let _ =
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, self.height - 15.0, esc(xlabel));
        let (ly, lx) = ((y0 + y1) / 2.0, 18.0);
        let _ = writeln!(
            out,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
            esc(ylabel)
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="13">{}</text>"#, (x0 + x1) / 2.0, esc(title));
        out.push_str("</g>\n");
    }
}

fn legend(out: &mut String, frame: &Frame, cmap: &DivergingColormap, insignificant: Rgb, p_threshold: f64) {
    let x = frame.width - MARGIN_RIGHT + 30.0;
    let (top, bottom) = (frame.y.p1, frame.y.p1 + frame.plot_height() * 0.6);
    let _ = writeln!(
        out,
        r#"<defs><linearGradient id="mca-scale" x1="0" y1="0" x2="0" y2="1"><stop offset="0" stop-color="{}"/><stop offset="0.5" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        cmap.positive.hex(),
        cmap.midpoint.hex(),
        cmap.negative.hex()
    );
    out.push_str("<g class=\"legend\">\n");
    let _ = writeln!(
        out,
        r#"<rect x="{x:.2}" y="{top:.2}" width="16" height="{:.2}" fill="url(#mca-scale)" stroke="{AXIS_COLOR}"/>"#,
        bottom - top
    );
    for (label, frac) in [("1", 0.0), ("0", 0.5), ("-1", 1.0)] {
        let y = top + (bottom - top) * frac;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, x + 22.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}">r</text>"#, top - 8.0);
    let sw = bottom + 20.0;
    let _ = writeln!(
        out,
        r#"<rect x="{x:.2}" y="{sw:.2}" width="16" height="12" fill="{}" stroke="{CELL_STROKE}"/><text x="{:.2}" y="{:.2}">p &gt; {}</text>"#,
        insignificant.hex(),
        x + 22.0,
        sw + 10.0,
        fmt_sig(p_threshold)
    );
    out.push_str("</g>\n");
}

/// Fill of a drawn cell.
pub fn cell_color(cell: &McaCell, opts: &RenderOptions) -> Rgb {
    match (cell.significant, cell.r) {
        (true, Some(r)) => opts.colormap.map(round_sig(r)),
        _ => opts.insignificant_color,
    }
}

/// Renders an MCA plot: one marker per non-omitted cell, ordinate `n / M`,
/// abscissa `alpha` or the window's median sorting value.
///
/// Markers carry `data-alpha`, `data-beta`, `data-n`, `data-r` and `data-p`
/// attributes for hit-testing; `data-r`/`data-p` are empty when undefined.
pub fn render_mca(grid: &McaGrid, opts: &RenderOptions) -> Result<String, RenderError> {
    let drawn: Vec<&McaCell> = grid.cells.iter().filter(|c| !c.omitted).collect();
    if drawn.is_empty() {
        return Err(RenderError::NothingToDraw);
    }
    let res = grid.resolution.max(1) as f64;
    let total = grid.total_observations.max(1) as f64;
    let xpos = |c: &McaCell| match opts.abscissa {
        AbscissaMode::Quantile => round_sig(c.alpha),
        AbscissaMode::MedianValue => round_sig(c.median_sorting_value),
    };
    let (xd, xticks) = match opts.abscissa {
        AbscissaMode::Quantile => ((0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
        AbscissaMode::MedianValue => {
            let lo = drawn.iter().map(|c| xpos(c)).fold(f64::INFINITY, f64::min);
            let hi = drawn.iter().map(|c| xpos(c)).fold(f64::NEG_INFINITY, f64::max);
            let d = padded_domain(lo, hi);
            (d, nice_ticks(d.0, d.1))
        }
    };
    let frame = Frame::new(opts.width, opts.height, xd, (0.0, 1.0 + 1.0 / res));
    let (mw, mh) = match (opts.marker_size, opts.abscissa) {
        (Some(s), _) => (s, s),
        (None, AbscissaMode::Quantile) => (frame.plot_width() / res, frame.plot_height() * 2.0 / (res + 1.0)),
        (None, AbscissaMode::MedianValue) => (6.0, frame.plot_height() * 2.0 / (res + 1.0)),
    };

    let mut out = String::new();
    frame.open(&mut out);
    let s = &grid.sorting_variable;
    let xlabel = opts.x_label.clone().unwrap_or_else(|| match opts.abscissa {
        AbscissaMode::Quantile => format!("quantile of {s} (window center)"),
        AbscissaMode::MedianValue => format!("median {s} of subpopulation"),
    });
    let ylabel = opts.y_label.clone().unwrap_or_else(|| "fraction of population".to_string());
    let title = opts.title.clone().unwrap_or_else(|| format!("{} correlation of {} and {} by {s}", grid.method, grid.x, grid.y));

    out.push_str("<g class=\"cells\">\n");
    for c in &drawn {
        let cx = frame.x.at(xpos(c));
        let cy = frame.y.at(c.n as f64 / total);
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{:.2}" y="{:.2}" width="{mw:.2}" height="{mh:.2}" fill="{}" stroke="{CELL_STROKE}" stroke-width="0.5" data-alpha="{}" data-beta="{}" data-n="{}" data-r="{}" data-p="{}"/>"#,
            cx - mw / 2.0,
            cy - mh / 2.0,
            cell_color(c, opts).hex(),
            fmt_sig(c.alpha),
            fmt_sig(c.beta),
            c.n,
            opt_attr(c.r),
            opt_attr(c.p_value),
        );
    }
    out.push_str("</g>\n");
    frame.axes(&mut out, &xticks, &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0], &xlabel, &ylabel, &title);
    legend(&mut out, &frame, &opts.colormap, opts.insignificant_color, grid.p_threshold);
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScatterOptions {
    pub width: u32,
    pub height: u32,
    pub marker_radius: f64,
    pub color: Rgb,
    pub highlight_color: Rgb,
    pub title: Option<String>,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            width: 480,
            height: 480,
            marker_radius: 3.0,
            color: Rgb(0x55, 0x55, 0x55),
            highlight_color: Rgb(0xd9, 0x5f, 0x02),
            title: None,
        }
    }
}

/// Scatter plot of every row of `i` against `j`.
pub fn render_scatter(d: &DataMatrix, i: &str, j: &str, highlight: &BTreeSet<usize>, opts: &ScatterOptions) -> Result<String, RenderError> {
    let rows: Vec<usize> = (0..d.n_rows()).collect();
    render_scatter_rows(d, i, j, &rows, highlight, opts)
}

/// Scatter plot restricted to `rows`. Highlighted points are filled, the
/// rest drawn as outlines. Rows missing either value are skipped.
pub fn render_scatter_rows(
    d: &DataMatrix,
    i: &str,
    j: &str,
    rows: &[usize],
    highlight: &BTreeSet<usize>,
    opts: &ScatterOptions,
) -> Result<String, RenderError> {
    let (ic, jc) = (d.column_index(i)?, d.column_index(j)?);
    let pts: Vec<(usize, f64, f64)> = rows.iter().filter_map(|&r| Some((r, round_sig(d.get(r, ic)?), round_sig(d.get(r, jc)?)))).collect();
    let range = |f: fn(&(usize, f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if pts.is_empty() {
            (0.0, 1.0)
        } else {
            padded_domain(lo, hi)
        }
    };
    let (xd, yd) = (range(|p| p.1), range(|p| p.2));
    let frame = Frame::new(opts.width, opts.height, xd, yd);
    let mut out = String::new();
    frame.open(&mut out);
    out.push_str("<g class=\"points\">\n");
    for &(r, x, y) in &pts {
        let (fill, stroke) = if highlight.contains(&r) {
            (opts.highlight_color.hex(), opts.highlight_color.hex())
        } else {
            ("none".to_string(), opts.color.hex())
        };
        let _ = writeln!(
            out,
            r#"<circle class="point{}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{fill}" stroke="{stroke}" data-index="{r}"/>"#,
            if highlight.contains(&r) { " highlight" } else { "" },
            frame.x.at(x),
            frame.y.at(y),
            opts.marker_radius
        );
    }
    out.push_str("</g>\n");
    let title = opts.title.clone().unwrap_or_else(|| format!("{j} against {i}"));
    frame.axes(&mut out, &nice_ticks(xd.0, xd.1), &nice_ticks(yd.0, yd.1), i, j, &title);
    out.push_str("</svg>\n");
    Ok(out)
}
