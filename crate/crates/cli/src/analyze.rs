use std::path::PathBuf;

use mca_core::data::{load_csv, normalize_housekeeping, DataError, NormalizeOptions};
use mca_core::engine::build_grid;
use mca_core::grid_io::{grid_csv_string, records, CellRecord, GRID_COLUMNS};
use mca_core::numfmt::round_sig;
use mca_core::{ActiveSet, CsvOptions, DataMatrix, EngineError, GridConfig, McaGrid, Method};
use serde::Serialize;

use crate::output::{read_input, usage, CliError, CliResult, Ctx};

/// Additive offset applied before housekeeping division unless overridden.
pub const DEFAULT_OFFSET: f64 = 0.0217;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input CSV with a header row; `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    /// Sorting variable.
    #[arg(long)]
    sort: String,
    /// Variable pair A,B.
    #[arg(long, value_parser = parse_pair, required_unless_present = "all_pairs", conflicts_with = "all_pairs")]
    pair: Option<(String, String)>,
    /// Analyse every pair of the other non-reference variables.
    #[arg(long)]
    all_pairs: bool,
    /// Lattice resolution R (windows step by 1/R).
    #[arg(long, default_value_t = GridConfig::default().resolution)]
    resolution: usize,
    #[arg(long, default_value = "pearson", value_parser = parse_method)]
    method: Method,
    /// Significance threshold.
    #[arg(long, default_value_t = GridConfig::default().p_threshold)]
    p: f64,
    /// Windows with fewer members are omitted.
    #[arg(long, default_value_t = GridConfig::default().min_members)]
    min_members: usize,
    /// Divide every variable by this column after adding --offset.
    #[arg(long, value_name = "NAME")]
    normalize_housekeeping: Option<String>,
    #[arg(long, default_value_t = DEFAULT_OFFSET, requires = "normalize_housekeeping")]
    offset: f64,
    /// Divide by the raw housekeeping value instead of value + offset.
    #[arg(long, requires = "normalize_housekeeping")]
    no_offset_housekeeping: bool,
    /// Column holding observation ids.
    #[arg(long)]
    id_column: Option<String>,
    /// Comma-separated row indices (0-based) left out of the analysis.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() && !b.contains(',') => {
            Ok((a.trim().to_string(), b.trim().to_string()))
        }
        _ => Err(format!("`{s}` is not a pair A,B")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Resolution { .. }
        | EngineError::RepeatedVariable(_)
        | EngineError::MinMembers(_)
        | EngineError::Threshold(_)
        | EngineError::IndexOutOfRange { .. }
        | EngineError::Data(DataError::UnknownVariable(_)) => usage(e),
        other => CliError::Runtime(other.into()),
    }
}

#[derive(Serialize)]
struct GridJson<'a> {
    sorting_variable: &'a str,
    x: &'a str,
    y: &'a str,
    method: Method,
    resolution: usize,
    p_threshold: f64,
    min_members: usize,
    total_observations: usize,
    cells: Vec<CellRecord>,
}

impl<'a> From<&'a McaGrid> for GridJson<'a> {
    fn from(g: &'a McaGrid) -> Self {
        GridJson {
            sorting_variable: &g.sorting_variable,
            x: &g.x,
            y: &g.y,
            method: g.method,
            resolution: g.resolution,
            p_threshold: round_sig(g.p_threshold),
            min_members: g.min_members,
            total_observations: g.total_observations,
            cells: records(g),
        }
    }
}

fn load(a: &Args) -> CliResult<DataMatrix> {
    let bytes = read_input(&a.input)?;
    let opts = CsvOptions { id_column: a.id_column.clone(), ..Default::default() };
    let d = load_csv(&bytes[..], &opts).map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", a.input.display())))?;
    let Some(hk) = &a.normalize_housekeeping else {
        return Ok(d);
    };
    let opts = NormalizeOptions { offset_housekeeping: !a.no_offset_housekeeping };
    normalize_housekeeping(&d, hk, a.offset, opts).map_err(|e| match e {
        DataError::UnknownVariable(_) => usage(e),
        other => CliError::Runtime(other.into()),
    })
}

pub fn run(ctx: &Ctx, a: Args) -> CliResult {
    let d = load(&a)?;
    d.column_index(&a.sort).map_err(usage)?;
    let pairs: Vec<(String, String)> = match &a.pair {
        Some(p) => vec![p.clone()],
        None => {
            let vars: Vec<&str> = d.analysis_variables().into_iter().filter(|v| *v != a.sort).collect();
            let mut out = Vec::new();
            for (k, x) in vars.iter().enumerate() {
                for y in &vars[k + 1..] {
                    out.push((x.to_string(), y.to_string()));
                }
            }
            if out.is_empty() {
                return Err(usage("--all-pairs needs at least two variables besides the sorting variable"));
            }
            out
        }
    };
    let active = ActiveSet::excluding(d.n_rows(), a.exclude.iter().copied()).map_err(engine_error)?;
    let cfg = GridConfig { resolution: a.resolution, method: a.method, p_threshold: a.p, min_members: a.min_members };
    let mut grids = Vec::with_capacity(pairs.len());
    for (x, y) in &pairs {
        let g = build_grid(&d, &a.sort, x, y, &cfg, &active).map_err(engine_error)?;
        ctx.log(format_args!(
            "{x},{y} by {}: {} cells, {} significant, {} omitted",
            a.sort,
            g.cells.len(),
            g.cells.iter().filter(|c| c.significant).count(),
            g.cells.iter().filter(|c| c.omitted).count()
        ));
        grids.push(g);
    }

    let text = match (a.format, a.all_pairs) {
        (Format::Csv, false) => grid_csv_string(&grids[0]),
        (Format::Csv, true) => all_pairs_csv(&grids),
        (Format::Json, false) => json(&GridJson::from(&grids[0]))?,
        (Format::Json, true) => json(&grids.iter().map(GridJson::from).collect::<Vec<_>>())?,
    };
    ctx.emit(text.as_bytes())
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(anyhow::Error::from)?;
    s.push('\n');
    Ok(s)
}

/// One grid CSV per pair, stacked, with leading `x,y` columns.
fn all_pairs_csv(grids: &[McaGrid]) -> String {
    let mut out = format!("x,y,{}\n", GRID_COLUMNS.join(","));
    for g in grids {
        for line in grid_csv_string(g).lines().skip(1) {
            out.push_str(&format!("{},{},{line}\n", csv_field(&g.x), csv_field(&g.y)));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
