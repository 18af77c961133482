//! HTTP front end for [`StudyStore`].
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/studies` | [`CreateStudy`] | `{study_id, items, annotator_tokens}` |
//! | GET | `/studies/{id}/next?annotator=T` | | `{done: false, item}` or `{done: true}` |
//! | POST | `/studies/{id}/judgments` | `{item_id, annotator, choice}` | `{accepted: true}` |
//! | GET | `/studies/{id}/results` | | [`super::AggregateResult`], 409 until complete |
//!
//! Errors are `{"error": message}` with 400, 404 or 409.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use super::{CreateStudy, Judgment, StudyStore};
use crate::error::{Error, IoContext, Result};

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownStudy(_) | Error::UnknownAnnotator(_) | Error::UnknownItem(_) => StatusCode::NOT_FOUND,
            Error::DuplicateJudgment { .. } | Error::ItemFull(_) | Error::IncompleteStudy(_) => StatusCode::CONFLICT,
            Error::Validation { .. } | Error::CoverageMismatch(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.0.to_string()}))).into_response()
    }
}

type ApiResult = std::result::Result<Response, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::validation("body", e.to_string()))
}

async fn create(State(store): State<Arc<StudyStore>>, body: Bytes) -> ApiResult {
    let req: CreateStudy = parse(&body)?;
    let created = store.create(req)?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

async fn next(
    State(store): State<Arc<StudyStore>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<NextQuery>,
) -> ApiResult {
    let body = match store.next_item(&id, &q.annotator)? {
        Some(item) => json!({"done": false, "item": item}),
        None => json!({"done": true}),
    };
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    item_id: String,
    annotator: String,
    choice: super::Choice,
}

async fn judge(State(store): State<Arc<StudyStore>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult {
    let s: Submission = parse(&body)?;
    store.submit(
        &id,
        Judgment {
            item_id: s.item_id,
            annotator: s.annotator,
            choice: s.choice,
            timestamp_ms: 0,
        },
    )?;
    Ok((StatusCode::CREATED, Json(json!({"accepted": true}))).into_response())
}

async fn results(State(store): State<Arc<StudyStore>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    Ok(Json(store.results(&id)?).into_response())
}

pub fn router(store: Arc<StudyStore>) -> Router {
    Router::new()
        .route("/studies", post(create))
        .route("/studies/{id}/next", get(next))
        .route("/studies/{id}/judgments", post(judge))
        .route("/studies/{id}/results", get(results))
        .with_state(store)
}

pub async fn serve(store: Arc<StudyStore>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .io_context(|| format!("binding {addr}"))?;
    log::info!("annotation service listening on {addr}");
    axum::serve(listener, router(store))
        .await
        .io_context(|| "serving".to_string())
}

/// Opens the log at `log_path` and serves until the process is stopped.
pub fn serve_blocking(log_path: &Path, addr: SocketAddr) -> Result<()> {
    let store = Arc::new(StudyStore::open(log_path)?);
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .io_context(|| "starting the runtime".to_string())?
        .block_on(serve(store, addr))
}
