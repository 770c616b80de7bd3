//! Request handlers.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use mca_core::engine::{build_grid, population_correlation, resolve_window};
use mca_core::grid_io::{records, CellRecord};
use mca_core::numfmt::round_sig;
use mca_core::render::{render_mca, render_scatter_rows, AbscissaMode, RenderOptions, Rgb, ScatterOptions};
use mca_core::{ActiveSet, CsvOptions, DataMatrix, EngineError, GridConfig, McaGrid, Method};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{AnalysisSession, Dataset, SessionUpdate, StoreError};
use crate::AppState;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownDataset(id) => Self::new(StatusCode::NOT_FOUND, format!("unknown dataset `{id}`")),
            StoreError::UnknownSession(id) => Self::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`")),
            StoreError::IndexOutOfRange { index, rows } => {
                Self::invalid(format!("observation index {index} out of range (dataset has {rows} rows)"))
            }
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::invalid(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(e.status(), e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    Ok(q?.0)
}

fn parse<T: std::str::FromStr<Err = String>>(v: Option<&str>, default: T) -> ApiResult<T> {
    v.map_or(Ok(default), |s| s.parse().map_err(ApiError::invalid))
}

#[derive(Serialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub variables: Vec<String>,
    pub n_observations: usize,
}

impl From<&Dataset> for DatasetSummary {
    fn from(d: &Dataset) -> Self {
        DatasetSummary { dataset_id: d.id.clone(), variables: d.matrix.variable_names().to_vec(), n_observations: d.matrix.n_rows() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UploadParams {
    id_column: Option<String>,
}

pub async fn upload(
    State(st): State<AppState>,
    q: Result<Query<UploadParams>, QueryRejection>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetSummary>)> {
    let q = query(q)?;
    let opts = CsvOptions { id_column: q.id_column, ..Default::default() };
    let matrix = mca_core::data::load_csv(&body[..], &opts).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let ds = st.store.insert_dataset(matrix);
    Ok((StatusCode::CREATED, Json(DatasetSummary::from(&*ds))))
}

pub async fn list(State(st): State<AppState>) -> Json<Vec<DatasetSummary>> {
    Json(st.store.datasets().iter().map(|d| DatasetSummary::from(&**d)).collect())
}

pub async fn describe(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DatasetSummary>> {
    Ok(Json(DatasetSummary::from(&*st.store.dataset(&id)?)))
}

/// The dataset and the active rows of the optional session.
fn resolve(st: &AppState, id: &str, session: Option<&str>) -> ApiResult<(Arc<Dataset>, ActiveSet)> {
    let ds = st.store.dataset(id)?;
    let active = match session {
        Some(sid) => st.store.session(id, sid)?.active_set(ds.matrix.n_rows()),
        None => ActiveSet::all(ds.matrix.n_rows()),
    };
    Ok((ds, active))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    sort: String,
    x: String,
    y: String,
    r: Option<usize>,
    method: Option<String>,
    p: Option<f64>,
    min_n: Option<usize>,
    session: Option<String>,
}

async fn grid(st: &AppState, id: &str, q: &GridParams) -> ApiResult<McaGrid> {
    let defaults = GridConfig::default();
    let cfg = GridConfig {
        resolution: q.r.unwrap_or(defaults.resolution),
        method: parse(q.method.as_deref(), Method::Pearson)?,
        p_threshold: q.p.unwrap_or(defaults.p_threshold),
        min_members: q.min_n.unwrap_or(defaults.min_members),
    };
    let (ds, active) = resolve(st, id, q.session.as_deref())?;
    let (s, x, y) = (q.sort.clone(), q.x.clone(), q.y.clone());
    let g = tokio::task::spawn_blocking(move || build_grid(&ds.matrix, &s, &x, &y, &cfg, &active))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(g)
}

pub async fn mca(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<GridParams>, QueryRejection>,
) -> ApiResult<Json<Vec<CellRecord>>> {
    let q = query(q)?;
    Ok(Json(records(&grid(&st, &id, &q).await?)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvgParams {
    sort: String,
    x: String,
    y: String,
    r: Option<usize>,
    method: Option<String>,
    p: Option<f64>,
    min_n: Option<usize>,
    session: Option<String>,
    abscissa: Option<String>,
    width: Option<u32>,
    height: Option<u32>,
    marker_size: Option<f64>,
    positive_color: Option<String>,
    negative_color: Option<String>,
    insignificant_color: Option<String>,
}

fn color(v: Option<&str>, default: Rgb) -> ApiResult<Rgb> {
    v.map_or(Ok(default), |s| s.parse().map_err(|e: mca_core::render::RenderError| ApiError::invalid(e.to_string())))
}

const SVG: [(header::HeaderName, &str); 1] = [(header::CONTENT_TYPE, "image/svg+xml")];

pub async fn mca_svg(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<SvgParams>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let mut opts = RenderOptions::default();
    opts.abscissa = parse(q.abscissa.as_deref(), AbscissaMode::Quantile)?;
    opts.width = q.width.unwrap_or(opts.width);
    opts.height = q.height.unwrap_or(opts.height);
    opts.marker_size = q.marker_size;
    opts.colormap.positive = color(q.positive_color.as_deref(), opts.colormap.positive)?;
    opts.colormap.negative = color(q.negative_color.as_deref(), opts.colormap.negative)?;
    opts.insignificant_color = color(q.insignificant_color.as_deref(), opts.insignificant_color)?;
    let gp = GridParams { sort: q.sort, x: q.x, y: q.y, r: q.r, method: q.method, p: q.p, min_n: q.min_n, session: q.session };
    let g = grid(&st, &id, &gp).await?;
    let svg = render_mca(&g, &opts).map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok((SVG, svg))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowParams {
    sort: String,
    alpha: f64,
    beta: f64,
    session: Option<String>,
}

#[derive(Serialize)]
pub struct Subpopulation {
    pub indices: Vec<usize>,
    pub median_s: f64,
    pub n: usize,
}

pub async fn subpopulation(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<WindowParams>, QueryRejection>,
) -> ApiResult<Json<Subpopulation>> {
    let q = query(q)?;
    let (ds, active) = resolve(&st, &id, q.session.as_deref())?;
    let w = resolve_window(&ds.matrix, &q.sort, q.alpha, q.beta, &active)?;
    Ok(Json(Subpopulation { n: w.members.len(), median_s: round_sig(w.median_sorting_value), indices: w.members }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationParams {
    x: String,
    y: String,
    method: Option<String>,
    /// Restricts to rows that also have a sorting value, as the grid does.
    sort: Option<String>,
    session: Option<String>,
}

pub async fn correlation(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CorrelationParams>, QueryRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let q = query(q)?;
    let method = parse(q.method.as_deref(), Method::Pearson)?;
    let (ds, mut active) = resolve(&st, &id, q.session.as_deref())?;
    if let Some(s) = &q.sort {
        let sc = ds.matrix.column_index(s).map_err(EngineError::from)?;
        let rows = active.indices().iter().copied().filter(|&r| !ds.matrix.is_missing(r, sc));
        active = ActiveSet::from_indices(ds.matrix.n_rows(), rows)?;
    }
    let c = population_correlation(&ds.matrix, &q.x, &q.y, method, &active)?;
    Ok(Json(json!({
        "x": q.x,
        "y": q.y,
        "method": c.method,
        "n": c.n,
        "r": c.defined.then(|| round_sig(c.r)),
        "p": c.defined.then(|| round_sig(c.p_value)),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterParams {
    x: String,
    y: String,
    session: Option<String>,
    /// Comma-separated row indices drawn filled.
    highlight: Option<String>,
}

#[derive(Serialize)]
pub struct Point {
    pub index: usize,
    pub id: String,
    pub x: f64,
    pub y: f64,
}

fn points(m: &DataMatrix, x: &str, y: &str, active: &ActiveSet) -> ApiResult<Vec<Point>> {
    let xc = m.column_index(x).map_err(EngineError::from)?;
    let yc = m.column_index(y).map_err(EngineError::from)?;
    Ok(active
        .indices()
        .iter()
        .filter_map(|&r| {
            Some(Point { index: r, id: m.observation_ids()[r].clone(), x: round_sig(m.get(r, xc)?), y: round_sig(m.get(r, yc)?) })
        })
        .collect())
}

pub async fn scatter(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ScatterParams>, QueryRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let q = query(q)?;
    let (ds, active) = resolve(&st, &id, q.session.as_deref())?;
    let pts = points(&ds.matrix, &q.x, &q.y, &active)?;
    Ok(Json(json!({ "x": q.x, "y": q.y, "points": pts })))
}

fn index_list(s: &str) -> ApiResult<BTreeSet<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| ApiError::invalid(format!("`{t}` is not an observation index"))))
        .collect()
}

pub async fn scatter_svg(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ScatterParams>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let (ds, active) = resolve(&st, &id, q.session.as_deref())?;
    let highlight = q.highlight.as_deref().map_or(Ok(BTreeSet::new()), index_list)?;
    let svg = render_scatter_rows(&ds.matrix, &q.x, &q.y, active.indices(), &highlight, &ScatterOptions::default())
        .map_err(|e| ApiError::invalid(e.to_string()))?;
    Ok((SVG, svg))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    excluded: Vec<usize>,
}

pub async fn create_session(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<AnalysisSession>)> {
    let body = body?.0;
    Ok((StatusCode::CREATED, Json((*st.store.create_session(&id, &body.excluded)?).clone())))
}

pub async fn get_session(State(st): State<AppState>, Path((id, sid)): Path<(String, String)>) -> ApiResult<Json<AnalysisSession>> {
    Ok(Json((*st.store.session(&id, &sid)?).clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSession {
    excluded: Option<Vec<usize>>,
    #[serde(default)]
    add: Vec<usize>,
    #[serde(default)]
    remove: Vec<usize>,
}

pub async fn patch_session(
    State(st): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    body: Result<Json<PatchSession>, JsonRejection>,
) -> ApiResult<Json<AnalysisSession>> {
    let b = body?.0;
    let up = SessionUpdate { excluded: b.excluded, add: b.add, remove: b.remove };
    Ok(Json((*st.store.update_session(&id, &sid, &up)?).clone()))
}
