use std::path::PathBuf;

use mca_core::grid_io::{read_grid_csv, GridLabels};
use mca_core::render::{render_mca, AbscissaMode, RenderOptions, Rgb};
use mca_core::{GridConfig, Method};

use crate::output::{read_input, usage, CliError, CliResult, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Grid CSV written by `analyze`; `-` reads standard input.
    #[arg(long)]
    grid: PathBuf,
    /// Sorting variable name used in labels.
    #[arg(long, default_value = "s")]
    sort: String,
    /// Pair names A,B used in the title.
    #[arg(long, default_value = "x,y")]
    pair: String,
    /// Method named in the title.
    #[arg(long, default_value = "pearson", value_parser = parse_method)]
    method: Method,
    /// Threshold shown in the legend.
    #[arg(long, default_value_t = GridConfig::default().p_threshold)]
    p: f64,
    /// quantile (window center) or median (median sorting value).
    #[arg(long, default_value = "quantile", value_parser = parse_abscissa)]
    abscissa: AbscissaMode,
    #[arg(long, value_parser = parse_color)]
    positive_color: Option<Rgb>,
    #[arg(long, value_parser = parse_color)]
    negative_color: Option<Rgb>,
    #[arg(long, value_parser = parse_color)]
    insignificant_color: Option<Rgb>,
    #[arg(long, default_value_t = RenderOptions::default().width)]
    width: u32,
    #[arg(long, default_value_t = RenderOptions::default().height)]
    height: u32,
    /// Marker edge in pixels.
    #[arg(long)]
    marker_size: Option<f64>,
    #[arg(long)]
    title: Option<String>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_abscissa(s: &str) -> Result<AbscissaMode, String> {
    s.parse()
}

fn parse_color(s: &str) -> Result<Rgb, String> {
    s.parse().map_err(|e: mca_core::render::RenderError| e.to_string())
}

pub fn run(ctx: &Ctx, a: Args) -> CliResult {
    let (x, y) = a.pair.split_once(',').ok_or_else(|| usage(format!("--pair `{}` is not A,B", a.pair)))?;
    let labels = GridLabels {
        sorting_variable: a.sort.clone(),
        x: x.to_string(),
        y: y.to_string(),
        method: a.method,
        p_threshold: a.p,
        ..Default::default()
    };
    let bytes = read_input(&a.grid)?;
    let grid = read_grid_csv(&bytes[..], &labels).map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", a.grid.display())))?;
    let mut opts = RenderOptions {
        width: a.width,
        height: a.height,
        abscissa: a.abscissa,
        marker_size: a.marker_size,
        title: a.title,
        ..Default::default()
    };
    if let Some(c) = a.positive_color {
        opts.colormap.positive = c;
    }
    if let Some(c) = a.negative_color {
        opts.colormap.negative = c;
    }
    if let Some(c) = a.insignificant_color {
        opts.insignificant_color = c;
    }
    let svg = render_mca(&grid, &opts).map_err(|e| CliError::Runtime(e.into()))?;
    ctx.log(format_args!("rendered {} cells", grid.cells.iter().filter(|c| !c.omitted).count()));
    ctx.emit(svg.as_bytes())
}
