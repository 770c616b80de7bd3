use std::collections::BTreeSet;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mca_core::engine::{build_grid, ActiveSet, GridConfig};
use mca_core::grid_io::{read_grid_csv, write_grid_csv, GridLabels};
use mca_core::render::{render_mca, RenderOptions};
use mca_core::{CsvOptions, DataMatrix};
use mca_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::default(), ServiceConfig::default())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec(), ctype)
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b, _) = call(app, Method::GET, uri, None).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn send_json(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b, _) = call(app, method, uri, Some(body)).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn upload(app: &Router, csv: &str) -> (StatusCode, Value) {
    let req = Request::post("/datasets").header(header::CONTENT_TYPE, "text/csv").body(Body::from(csv.to_string())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let b = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

/// Uncorrelated sorting and pair columns from a fixed recurrence, plus one
/// row far above the rest in all three.
fn outlier_matrix() -> DataMatrix {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut rows: Vec<Vec<f64>> = (0..50).map(|_| vec![next(), next(), next()]).collect();
    rows.push(vec![3.0, 3.0, 3.0]);
    DataMatrix::from_rows(&["S", "X", "Y"], &rows).unwrap()
}

/// The matrix as the service holds it after upload.
fn uploaded_outlier_matrix() -> DataMatrix {
    mca_core::data::load_csv(csv_of(&outlier_matrix()).as_bytes(), &CsvOptions::default()).unwrap()
}

fn csv_of(d: &DataMatrix) -> String {
    d.to_csv_string(&CsvOptions::default())
}

async fn with_outlier_dataset() -> (Router, String) {
    let app = app();
    let (s, v) = upload(&app, &csv_of(&outlier_matrix())).await;
    assert_eq!(s, StatusCode::CREATED);
    (app, v["dataset_id"].as_str().unwrap().to_string())
}

#[tokio::test]
async fn upload_and_list() {
    let app = app();
    let rows: String = (0..1000).map(|i| format!("{i},{}\n", i * 2)).collect();
    let (s, v) = upload(&app, &format!("a,b\n{rows}")).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["n_observations"], 1000);
    assert_eq!(v["variables"], json!(["a", "b"]));
    let (s, list) = get_json(&app, "/datasets").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 1);
    let (s, one) = get_json(&app, &format!("/datasets/{}", v["dataset_id"].as_str().unwrap())).await;
    assert_eq!((s, &one), (StatusCode::OK, &v));
}

#[tokio::test]
async fn upload_rejections() {
    let app = app();
    assert_eq!(upload(&app, "a,a\n1,2\n").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, "").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, "a,b\n1,x\n").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, "a,b\n1\n").await.0, StatusCode::BAD_REQUEST);
    let small = router(AppState::default(), ServiceConfig { body_limit: 64 });
    let big = format!("a\n{}", "1\n".repeat(100));
    assert_eq!(upload(&small, &big).await.0, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(upload(&small, "a\n1\n2\n").await.0, StatusCode::CREATED);
}

#[tokio::test]
async fn upload_with_id_column() {
    let app = app();
    let req = Request::post("/datasets?id_column=cell").body(Body::from("cell,a,b\nc1,1,2\nc2,3,4\nc3,5,7\n")).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let (_, pts) = get_json(&app, "/datasets/d1/scatter?x=a&y=b").await;
    assert_eq!(pts["points"][1]["id"], "c2");
}

#[tokio::test]
async fn grid_matches_engine_and_correlation_endpoint() {
    let (app, id) = with_outlier_dataset().await;
    let (s, cells) = get_json(&app, &format!("/datasets/{id}/mca?sort=S&x=X&y=Y&r=7")).await;
    assert_eq!(s, StatusCode::OK);
    let d = uploaded_outlier_matrix();
    let g = build_grid(&d, "S", "X", "Y", &GridConfig::new(7), &ActiveSet::all(51)).unwrap();
    assert_eq!(cells, serde_json::to_value(mca_core::grid_io::records(&g)).unwrap());
    let full = cells.as_array().unwrap().iter().find(|c| c["alpha"] == 0.5 && c["beta"] == 0.5).unwrap().clone();
    let (_, c) = get_json(&app, &format!("/datasets/{id}/correlation?x=X&y=Y")).await;
    assert_eq!((&c["r"], &c["p"], &c["n"]), (&full["r"], &full["p"], &full["n"]));

    let (_, single) = get_json(&app, &format!("/datasets/{id}/mca?sort=S&x=X&y=Y&r=2")).await;
    let single = single.as_array().unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0]["r"], full["r"]);

    let (_, sp) = get_json(&app, &format!("/datasets/{id}/mca?sort=S&x=X&y=Y&r=5&method=spearman&p=0.1&min_n=4")).await;
    assert_eq!(sp.as_array().unwrap().len(), 7);
}

#[tokio::test]
async fn invalid_parameters() {
    let (app, id) = with_outlier_dataset().await;
    for q in [
        "sort=S&x=X",
        "sort=S&x=X&y=Y&r=1",
        "sort=S&x=X&y=Y&r=52",
        "sort=S&x=X&y=Y&r=abc",
        "sort=S&x=X&y=Y&method=kendall",
        "sort=S&x=X&y=Q",
        "sort=S&x=X&y=X",
        "sort=S&x=X&y=Y&p=2",
        "sort=S&x=X&y=Y&min_n=2",
        "sort=S&x=X&y=Y&bogus=1",
    ] {
        let (s, v) = get_json(&app, &format!("/datasets/{id}/mca?{q}")).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{q}");
        assert!(v["error"].is_string(), "{q}");
    }
    assert_eq!(get_json(&app, "/datasets/nope/mca?sort=S&x=X&y=Y").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get_json(&app, &format!("/datasets/{id}/mca?sort=S&x=X&y=Y&session=s9")).await.0, StatusCode::NOT_FOUND);
    for q in ["alpha=0.1&beta=0.2", "alpha=0.5&beta=0.6", "alpha=0.5&beta=0"] {
        let (s, _) = get_json(&app, &format!("/datasets/{id}/subpopulation?sort=S&{q}")).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{q}");
    }
}

#[tokio::test]
async fn subpopulation_windows() {
    let (app, id) = with_outlier_dataset().await;
    let (_, all) = get_json(&app, &format!("/datasets/{id}/subpopulation?sort=S&alpha=0.5&beta=0.5")).await;
    assert_eq!(all["n"], 51);
    assert_eq!(all["indices"], json!((0..51).collect::<Vec<_>>()));

    let d = outlier_matrix();
    let mut order: Vec<usize> = (0..51).collect();
    order.sort_by(|&a, &b| d.get(a, 0).unwrap().total_cmp(&d.get(b, 0).unwrap()));
    // ranks 1..=round(0.3 * 51) = 15
    let mut low: Vec<usize> = order[..15].to_vec();
    low.sort_unstable();
    let (_, w) = get_json(&app, &format!("/datasets/{id}/subpopulation?sort=S&alpha=0.15&beta=0.15")).await;
    assert_eq!(w["indices"], json!(low));
    assert_eq!(w["n"], 15);
}

#[tokio::test]
async fn sessions_drive_exclusion() {
    let (app, id) = with_outlier_dataset().await;
    let base = format!("/datasets/{id}");
    let (s, sess) = send_json(&app, Method::POST, &format!("{base}/sessions"), json!({"excluded": []})).await;
    assert_eq!(s, StatusCode::CREATED);
    let sid = sess["session_id"].as_str().unwrap().to_string();
    assert_eq!(sess["excluded"], json!([]));
    assert!(sess["created_at"].as_u64().unwrap() > 0);

    let raw = get_json(&app, &format!("{base}/mca?sort=S&x=X&y=Y&r=5")).await.1;
    let same = get_json(&app, &format!("{base}/mca?sort=S&x=X&y=Y&r=5&session={sid}")).await.1;
    assert_eq!(raw, same);

    // the extreme row drives every window that holds it
    let held: Vec<&Value> =
        raw.as_array().unwrap().iter().filter(|c| c["alpha"].as_f64().unwrap() + c["beta"].as_f64().unwrap() >= 0.999).collect();
    assert!(held.iter().all(|c| c["significant"] == true && c["r"].as_f64().unwrap() > 0.0));

    let (s, upd) = send_json(&app, Method::PATCH, &format!("{base}/sessions/{sid}"), json!({"add": [50]})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(upd["excluded"], json!([50]));
    let after = get_json(&app, &format!("{base}/mca?sort=S&x=X&y=Y&r=5&session={sid}")).await.1;
    assert_ne!(after, raw);
    let full = after.as_array().unwrap().iter().find(|c| c["beta"] == 0.5).unwrap();
    assert_eq!(full["n"], 50);
    assert_eq!(full["significant"], false);

    for (a, b) in [(0.5, 0.5), (0.9, 0.1), (0.7, 0.3)] {
        let (_, w) = get_json(&app, &format!("{base}/subpopulation?sort=S&alpha={a}&beta={b}&session={sid}")).await;
        assert!(!w["indices"].as_array().unwrap().contains(&json!(50)));
    }
    let (_, pts) = get_json(&app, &format!("{base}/scatter?x=X&y=Y&session={sid}")).await;
    assert_eq!(pts["points"].as_array().unwrap().len(), 50);

    let (s, _) = send_json(&app, Method::PATCH, &format!("{base}/sessions/{sid}"), json!({"add": [51]})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = send_json(&app, Method::POST, &format!("{base}/sessions"), json!({"excluded": [99]})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, cur) = get_json(&app, &format!("{base}/sessions/{sid}")).await;
    assert_eq!(cur["excluded"], json!([50]));

    // removing the index restores the original grid byte for byte
    send_json(&app, Method::PATCH, &format!("{base}/sessions/{sid}"), json!({"remove": [50]})).await;
    let (_, restored, _) = call(&app, Method::GET, &format!("{base}/mca?sort=S&x=X&y=Y&r=5&session={sid}"), None).await;
    let (_, raw_bytes, _) = call(&app, Method::GET, &format!("{base}/mca?sort=S&x=X&y=Y&r=5"), None).await;
    assert_eq!(restored, raw_bytes);

    let (s, rep) =
        send_json(&app, Method::PATCH, &format!("{base}/sessions/{sid}"), json!({"excluded": [3, 1], "add": [2], "remove": [3]})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(rep["excluded"], json!([1, 2]));
}

#[tokio::test]
async fn sessions_are_isolated() {
    let (app, id) = with_outlier_dataset().await;
    let base = format!("/datasets/{id}");
    let a = send_json(&app, Method::POST, &format!("{base}/sessions"), json!({"excluded": [0, 1]})).await.1;
    let b = send_json(&app, Method::POST, &format!("{base}/sessions"), json!({})).await.1;
    let (a, b) = (a["session_id"].as_str().unwrap(), b["session_id"].as_str().unwrap());
    assert_ne!(a, b);
    let na = get_json(&app, &format!("{base}/scatter?x=X&y=Y&session={a}")).await.1["points"].as_array().unwrap().len();
    let nb = get_json(&app, &format!("{base}/scatter?x=X&y=Y&session={b}")).await.1["points"].as_array().unwrap().len();
    assert_eq!((na, nb), (49, 51));

    // a session is only visible through its own dataset
    let (_, other) = upload(&app, "p,q\n1,2\n3,4\n").await;
    let other = other["dataset_id"].as_str().unwrap();
    assert_eq!(get_json(&app, &format!("/datasets/{other}/sessions/{a}")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_updates_are_atomic() {
    let (app, id) = with_outlier_dataset().await;
    let base = format!("/datasets/{id}");
    let sid = send_json(&app, Method::POST, &format!("{base}/sessions"), json!({})).await.1["session_id"].as_str().unwrap().to_string();
    let even: Vec<usize> = (0..50).step_by(2).collect();
    let odd: Vec<usize> = (1..50).step_by(2).collect();
    let mut tasks = Vec::new();
    for k in 0..40 {
        let (app, base, sid) = (app.clone(), base.clone(), sid.clone());
        let set = if k % 2 == 0 { even.clone() } else { odd.clone() };
        tasks.push(tokio::spawn(async move {
            if k % 4 < 2 {
                send_json(&app, Method::PATCH, &format!("{base}/sessions/{sid}"), json!({ "excluded": set })).await;
                None
            } else {
                let (_, pts) = get_json(&app, &format!("{base}/scatter?x=X&y=Y&session={sid}")).await;
                let seen: BTreeSet<u64> = pts["points"].as_array().unwrap().iter().map(|p| p["index"].as_u64().unwrap()).collect();
                Some(seen)
            }
        }));
    }
    let everything: BTreeSet<u64> = (0..51).collect();
    let keep = |ex: &[usize]| -> BTreeSet<u64> { everything.iter().copied().filter(|i| !ex.contains(&(*i as usize))).collect() };
    let allowed = [everything.clone(), keep(&even), keep(&odd)];
    for t in tasks {
        if let Some(seen) = t.await.unwrap() {
            assert!(allowed.contains(&seen), "partial exclusion set observed");
        }
    }
}

#[tokio::test]
async fn svg_endpoints() {
    let (app, id) = with_outlier_dataset().await;
    let (s, body, ctype) = call(&app, Method::GET, &format!("/datasets/{id}/mca.svg?sort=S&x=X&y=Y&r=5"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ctype, "image/svg+xml");

    // same bytes as rendering a grid read back from its CSV export
    let d = uploaded_outlier_matrix();
    let g = build_grid(&d, "S", "X", "Y", &GridConfig::new(5), &ActiveSet::all(51)).unwrap();
    let mut csv = Vec::new();
    write_grid_csv(&g, &mut csv).unwrap();
    let labels = GridLabels { sorting_variable: "S".into(), x: "X".into(), y: "Y".into(), ..Default::default() };
    let back = read_grid_csv(&csv[..], &labels).unwrap();
    assert_eq!(String::from_utf8(body).unwrap(), render_mca(&back, &RenderOptions::default()).unwrap());

    let (s, recolored, _) =
        call(&app, Method::GET, &format!("/datasets/{id}/mca.svg?sort=S&x=X&y=Y&r=5&positive_color=%23008800&abscissa=median"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(recolored).unwrap().contains("#008800"));
    let (s, _, _) = call(&app, Method::GET, &format!("/datasets/{id}/mca.svg?sort=S&x=X&y=Y&positive_color=green"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, w) = get_json(&app, &format!("/datasets/{id}/subpopulation?sort=S&alpha=0.15&beta=0.15")).await;
    let members: Vec<String> = w["indices"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
    let (s, sc, ctype) =
        call(&app, Method::GET, &format!("/datasets/{id}/scatter.svg?x=X&y=Y&highlight={}", members.join(",")), None).await;
    assert_eq!((s, ctype.as_str()), (StatusCode::OK, "image/svg+xml"));
    let sc = String::from_utf8(sc).unwrap();
    assert_eq!(sc.matches("class=\"point highlight\"").count(), members.len());
    assert_eq!(sc.matches("class=\"point\"").count(), 51 - members.len());
}
