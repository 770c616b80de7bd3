use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use mca_core::sde::{simulate, simulate_mixture, RNG_ALGORITHM};
use mca_core::{CsvOptions, DataMatrix, ModelSpec, RepressionForm, SamplingPlan, SimError};
use serde::Serialize;

use crate::output::{usage, CliError, CliResult, Ctx};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Activation,
    Inhibition,
    /// Activation and inhibition samples concatenated (inhibition uses seed + 1).
    Mixture,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    model: Model,
    /// Noise amplitude.
    #[arg(long)]
    sigma: Option<f64>,
    /// Retained samples per model.
    #[arg(long, default_value_t = SamplingPlan::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = SamplingPlan::default().burn_in)]
    burn_in: usize,
    /// Keep every n-th state after burn-in.
    #[arg(long, default_value_t = SamplingPlan::default().thin)]
    thin: usize,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Hill repression form of the inhibition motif.
    #[arg(long, value_parser = parse_form)]
    repression_form: Option<RepressionForm>,
    /// Parameter override NAME=VALUE, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Prepend an `id` column with observation ids.
    #[arg(long)]
    with_ids: bool,
    /// Metadata file; defaults to `<out>.json` when --out is given.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

fn parse_form(s: &str) -> Result<RepressionForm, String> {
    s.parse()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    model: &'a str,
    specs: Vec<ModelSpec>,
    plan: SamplingPlan,
    seed: u64,
    rng: &'static str,
    version: &'static str,
    created_at_unix_ms: u128,
}

fn build_spec(base: ModelSpec, a: &Args) -> CliResult<ModelSpec> {
    let mut spec = base;
    if let Some(s) = a.sigma {
        spec.sigma = s;
    }
    if let Some(dt) = a.dt {
        spec.dt = dt;
    }
    if let Some(f) = a.repression_form {
        spec.repression_form = f;
    }
    for p in &a.params {
        let (name, value) = p.split_once('=').ok_or_else(|| usage(format!("--param `{p}` is not NAME=VALUE")))?;
        let value: f64 = value.trim().parse().map_err(|_| usage(format!("--param {name}: `{value}` is not a number")))?;
        spec.set_param(name.trim(), value).map_err(usage)?;
    }
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidParameter { .. } | SimError::UnknownParameter(_) | SimError::Plan(_) => usage(e),
        other => CliError::Runtime(other.into()),
    }
}

pub fn run(ctx: &Ctx, a: Args) -> CliResult {
    let plan = SamplingPlan { burn_in: a.burn_in, thin: a.thin, samples: a.samples, seed: ctx.seed };
    let (label, specs, data): (&str, Vec<ModelSpec>, DataMatrix) = match a.model {
        Model::Activation | Model::Inhibition => {
            let base = if matches!(a.model, Model::Activation) { ModelSpec::activation() } else { ModelSpec::inhibition() };
            let spec = build_spec(base, &a)?;
            let label = if matches!(a.model, Model::Activation) { "activation" } else { "inhibition" };
            (label, vec![spec], simulate(&spec, &plan).map_err(sim_error)?)
        }
        Model::Mixture => {
            let act = build_spec(ModelSpec::activation(), &a)?;
            let inh = build_spec(ModelSpec::inhibition(), &a)?;
            ("mixture", vec![act, inh], simulate_mixture(&act, &inh, &plan).map_err(sim_error)?)
        }
    };
    ctx.log(format_args!("simulated {} rows ({label}, seed {})", data.n_rows(), plan.seed));
    let opts = CsvOptions { id_column: a.with_ids.then(|| "id".to_string()), ..Default::default() };
    ctx.emit(data.to_csv_string(&opts).as_bytes())?;

    let sidecar_path = a.sidecar.clone().or_else(|| {
        ctx.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = sidecar_path {
        let record = Sidecar {
            model: label,
            specs,
            plan,
            seed: plan.seed,
            rng: RNG_ALGORITHM,
            version: env!("CARGO_PKG_VERSION"),
            created_at_unix_ms: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
        };
        let json = serde_json::to_string_pretty(&record).map_err(anyhow::Error::from)?;
        crate::output::write_file(&path, format!("{json}\n").as_bytes())?;
        ctx.log(format_args!("wrote {}", path.display()));
    }
    Ok(())
}
