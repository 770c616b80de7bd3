//! `mca`: simulate benchmark data, compute MCA grids, render them, or serve
//! them over HTTP.
//!
//! Exit status is 0 on success, 1 on runtime or environment failures and 2
//! on usage errors (bad flags, unknown variables, out-of-range settings).

mod analyze;
mod output;
mod render;
mod serve;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{CliError, Ctx};

#[derive(Debug, Parser)]
#[command(name = "mca", version, about = "Multiresolution correlation analysis")]
struct Cli {
    /// Random seed for simulations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Output file; standard output when omitted.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample steady-state data from a stochastic motif model.
    Simulate(simulate::Args),
    /// Compute the MCA grid of a variable pair.
    Analyze(analyze::Args),
    /// Draw a grid CSV as an SVG MCA plot.
    Render(render::Args),
    /// Run the local HTTP API.
    Serve(serve::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { seed: cli.seed, verbose: cli.verbose, out: cli.out };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&ctx, a),
        Command::Analyze(a) => analyze::run(&ctx, a),
        Command::Render(a) => render::run(&ctx, a),
        Command::Serve(a) => serve::run(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
