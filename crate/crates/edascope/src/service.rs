//! Read-only HTTP API over a loaded [`Snapshot`].

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::Error;
use crate::pipeline::{Snapshot, RESPONSE_SCHEMA};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_LIMIT: usize = 10;

/// Shared service state. Requests clone the current snapshot handle, so a
/// reload never disturbs a request in flight.
#[derive(Default)]
pub struct AppState {
    snapshot: RwLock<Option<Arc<Snapshot>>>,
}

impl AppState {
    pub fn new(snapshot: Option<Snapshot>) -> Arc<Self> {
        Arc::new(AppState { snapshot: RwLock::new(snapshot.map(Arc::new)) })
    }

    /// Atomically replaces the served snapshot.
    pub fn swap(&self, snapshot: Snapshot) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(snapshot));
    }

    pub fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn not_loaded() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "NotLoaded", "no index is loaded")
    }

    fn not_found(what: String) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e.code() {
            "EmptyQuery" | "InvalidArgument" | "UsageError" => StatusCode::BAD_REQUEST,
            "UnknownSequence" => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"schema": RESPONSE_SCHEMA, "error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn loaded(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.current().ok_or_else(ApiError::not_loaded)
}

#[derive(Deserialize)]
struct SearchRequest {
    code: String,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Deserialize)]
struct RecommendRequest {
    code: String,
    #[serde(default)]
    limit: Option<usize>,
}

#[derive(Deserialize)]
struct NotebookQuery {
    sequence: Option<String>,
}

async fn search(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> ApiResult<crate::pipeline::SearchResponse> {
    let Json(req) = body?;
    let snap = loaded(&state)?;
    Ok(Json(snap.search(&req.code, req.k.unwrap_or(DEFAULT_K))?))
}

async fn recommend(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RecommendRequest>, JsonRejection>,
) -> ApiResult<crate::pipeline::Recommendation> {
    let Json(req) = body?;
    let snap = loaded(&state)?;
    Ok(Json(snap.recommend(&req.code, req.limit.unwrap_or(DEFAULT_LIMIT))?))
}

async fn sequence(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<crate::pipeline::SequenceView> {
    let snap = loaded(&state)?;
    snap.sequence_view(&id).map(Json).ok_or_else(|| ApiError::not_found(format!("unknown sequence {id}")))
}

async fn notebook(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<NotebookQuery>,
) -> ApiResult<crate::pipeline::NotebookView> {
    let snap = loaded(&state)?;
    match snap.notebook_view(&id, q.sequence.as_deref()) {
        Ok(Some(view)) => Ok(Json(view)),
        Ok(None) => Err(ApiError::not_found(format!("unknown notebook {id}"))),
        Err(message) => Err(ApiError::not_found(message)),
    }
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    match state.current() {
        Some(snap) => Json(json!({
            "schema": RESPONSE_SCHEMA,
            "status": "ok",
            "entries": snap.index.len(),
            "encoder": snap.index.encoder_id,
            "recommender": snap.recommender.as_ref().map_or("retrieval", |m| m.kind_name()),
        }))
        .into_response(),
        None => ApiError::not_loaded().into_response(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/search", post(search))
        .route("/api/recommend", post(recommend))
        .route("/api/sequence/{id}", get(sequence))
        .route("/api/notebook/{id}", get(notebook))
        .route("/healthz", get(healthz))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
