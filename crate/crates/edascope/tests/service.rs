mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use edascope::service::{router, AppState};
use edascope::synthetic::SyntheticSpec;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn state(entries: usize) -> Arc<AppState> {
    let mut m = common::synthetic_manifest(&SyntheticSpec { notebooks: 6, ..Default::default() });
    common::truncate(&mut m, entries);
    AppState::new(Some(common::tfidf_snapshot(m)))
}

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, Value) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

const QUERY: &str = "import pandas as pd\ndf = pd.read_csv('a.csv')\ndf = df.fillna(0)\n";

#[tokio::test]
async fn healthz_reports_entries() {
    let s = state(10);
    let (status, body) = call(&s, get("/healthz")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["entries"], 10);
    assert_eq!(body["recommender"], "retrieval");
}

#[tokio::test]
async fn search_returns_k_hits_with_tiling_dna() {
    let s = state(10);
    let (status, body) = call(&s, post("/api/search", json!({"code": QUERY, "k": 3}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["schema"], 1);
    let results = body["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    let scores: Vec<f64> = results.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let snap = s.current().unwrap();
    for r in results {
        let id = r["id"].as_str().unwrap();
        let seq = snap.manifest.sequence(id).unwrap();
        let cells = snap.manifest.notebook(&seq.notebook_id).unwrap().cells.len();
        let runs = r["dna"].as_array().unwrap();
        let mut next = 0;
        for run in runs {
            assert_eq!(run["start"].as_u64().unwrap() as usize, next);
            next = run["end"].as_u64().unwrap() as usize;
        }
        assert_eq!(next, cells);
        let members: Vec<usize> = runs
            .iter()
            .filter(|r| r["in_sequence"] == true)
            .map(|r| r["start"].as_u64().unwrap() as usize)
            .collect();
        assert_eq!(members, seq.member_cells);
    }
}

#[tokio::test]
async fn empty_query_is_rejected() {
    let s = state(10);
    for uri in ["/api/search", "/api/recommend"] {
        let (status, body) = call(&s, post(uri, json!({"code": "x = 1"}))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(body["error"]["code"], "EmptyQuery");
    }
    let (status, body) = call(&s, post("/api/search", json!({"k": 3}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "BadRequest");
}

#[tokio::test]
async fn recommend_lists_known_apis() {
    let s = state(10);
    let (status, body) = call(&s, post("/api/recommend", json!({"code": QUERY, "limit": 5}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let apis = body["apis"].as_array().unwrap();
    assert!(apis.len() <= 5);
    let vocab = s.current().unwrap().manifest.vocab.clone().unwrap();
    for a in apis {
        let p = a["probability"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(vocab.id(a["api"].as_str().unwrap()).is_some());
    }
}

#[tokio::test]
async fn sequence_and_notebook_views() {
    let s = state(10);
    let snap = s.current().unwrap();
    let seq = &snap.manifest.sequences[0];

    let (status, body) = call(&s, get(&format!("/api/sequence/{}", seq.id))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["member_cells"], json!(seq.member_cells));

    let uri = format!("/api/notebook/{}?sequence={}", seq.notebook_id, seq.id);
    let (status, body) = call(&s, get(&uri)).await;
    assert_eq!(status, StatusCode::OK);
    let flagged: Vec<usize> = body["cells"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["in_sequence"] == true)
        .map(|c| c["index"].as_u64().unwrap() as usize)
        .collect();
    assert_eq!(flagged, seq.member_cells);

    let (status, body) = call(&s, get(&format!("/api/notebook/{}", seq.notebook_id))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["cells"].as_array().unwrap().iter().all(|c| c["in_sequence"] == false));
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let s = state(10);
    for uri in ["/api/sequence/nope:0001", "/api/notebook/nope", "/api/missing"] {
        let resp = router(s.clone()).oneshot(get(uri)).await.unwrap();
        assert_eq!(resp.status(), StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn nothing_loaded_is_503() {
    let s = AppState::new(None);
    let (status, body) = call(&s, get("/healthz")).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"]["code"], "NotLoaded");
    let (status, _) = call(&s, post("/api/search", json!({"code": QUERY}))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn swap_replaces_the_snapshot() {
    let s = state(10);
    let mut m = common::synthetic_manifest(&SyntheticSpec { notebooks: 6, ..Default::default() });
    common::truncate(&mut m, 4);
    s.swap(common::tfidf_snapshot(m));
    let (_, body) = call(&s, get("/healthz")).await;
    assert_eq!(body["entries"], 4);
}
