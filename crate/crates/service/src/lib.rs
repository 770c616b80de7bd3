//! Local HTTP API over in-memory datasets.
//!
//! Datasets are immutable once uploaded. Exclusions live in sessions, and
//! every analysis runs on the dataset's rows minus the session's excluded
//! indices. Reals in JSON bodies carry twelve significant digits, matching
//! the CSV export.

mod api;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

pub use store::{AnalysisSession, Dataset, SessionUpdate, Store, StoreError};

pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub store: Arc<Store>,
}

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    /// Largest accepted request body in bytes.
    pub body_limit: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { body_limit: DEFAULT_BODY_LIMIT }
    }
}

pub fn router(state: AppState, cfg: ServiceConfig) -> Router {
    Router::new()
        .route("/datasets", post(api::upload).get(api::list))
        .route("/datasets/{id}", get(api::describe))
        .route("/datasets/{id}/mca", get(api::mca))
        .route("/datasets/{id}/mca.svg", get(api::mca_svg))
        .route("/datasets/{id}/subpopulation", get(api::subpopulation))
        .route("/datasets/{id}/correlation", get(api::correlation))
        .route("/datasets/{id}/scatter", get(api::scatter))
        .route("/datasets/{id}/scatter.svg", get(api::scatter_svg))
        .route("/datasets/{id}/sessions", post(api::create_session))
        .route("/datasets/{id}/sessions/{sid}", get(api::get_session).patch(api::patch_session))
        .layer(DefaultBodyLimit::max(cfg.body_limit))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    cfg: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, cfg)).with_graceful_shutdown(shutdown).await
}
