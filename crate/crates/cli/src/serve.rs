use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use anyhow::Context;
use mca_core::data::load_csv;
use mca_core::CsvOptions;
use mca_service::{serve, AppState, ServiceConfig, DEFAULT_BODY_LIMIT};
use tokio::net::TcpListener;

use crate::output::{read_input, CliError, CliResult, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Port to listen on; 0 picks a free one.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    bind: IpAddr,
    /// CSV file to load at startup, repeatable.
    #[arg(long)]
    data: Vec<PathBuf>,
    /// Column holding observation ids in preloaded files.
    #[arg(long)]
    id_column: Option<String>,
    /// Largest accepted upload in bytes.
    #[arg(long, default_value_t = DEFAULT_BODY_LIMIT)]
    body_limit: usize,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub fn run(ctx: &Ctx, a: Args) -> CliResult {
    let state = AppState::default();
    let opts = CsvOptions { id_column: a.id_column.clone(), ..Default::default() };
    for path in &a.data {
        let bytes = read_input(path)?;
        let d = load_csv(&bytes[..], &opts).with_context(|| format!("loading {}", path.display()))?;
        let ds = state.store.insert_dataset(d);
        ctx.log(format_args!("loaded {} as {} ({} rows)", path.display(), ds.id, ds.matrix.n_rows()));
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let addr = SocketAddr::new(a.bind, a.port);
        let listener = TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        let local = listener.local_addr()?;
        let mut out = std::io::stdout().lock();
        writeln!(out, "listening on http://{local}")?;
        out.flush()?;
        drop(out);
        serve(listener, state, ServiceConfig { body_limit: a.body_limit }, shutdown_signal()).await?;
        ctx.log("shut down");
        Ok::<(), CliError>(())
    })
}
