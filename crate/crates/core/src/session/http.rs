use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::core::{ConfigUpdate, LabelSubmission, SessionConfig};
use super::store::SessionService;
use crate::error::Error;

/// An error as returned to clients: `{"error": {"code", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: String) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            Error::UnknownSession(_) => (S::NOT_FOUND, "unknown_session"),
            Error::UnknownDataset(_) => (S::NOT_FOUND, "unknown_dataset"),
            Error::UnknownUnit(_) => (S::BAD_REQUEST, "unknown_unit"),
            Error::UnknownRegion(_) => (S::BAD_REQUEST, "unknown_region"),
            Error::EmptyRegion(_) => (S::BAD_REQUEST, "empty_region"),
            Error::NegativeCount { .. } => (S::BAD_REQUEST, "negative_count"),
            Error::Relabel(_) => (S::CONFLICT, "relabel"),
            Error::NotDrawn(_) => (S::CONFLICT, "not_drawn"),
            Error::InvalidParameter(_) => (S::BAD_REQUEST, "invalid_parameter"),
            Error::InvalidProposal(_) => (S::BAD_REQUEST, "invalid_proposal"),
            Error::CorruptRecord(_) => (S::INTERNAL_SERVER_ERROR, "corrupt_record"),
            Error::Json(_) => (S::BAD_REQUEST, "invalid_json"),
            _ => (S::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request("invalid_body", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request("invalid_query", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;
type Service = Arc<SessionService>;

#[derive(Debug, Deserialize)]
struct DrawQuery {
    n: usize,
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
}

/// Routes:
///
/// | method | path | body |
/// |---|---|---|
/// | `POST` | `/sessions` | [`SessionConfig`] |
/// | `GET` | `/sessions/{id}` | |
/// | `POST` | `/sessions/{id}/draws?n=B` | |
/// | `POST` | `/sessions/{id}/labels` | `[{unit_id, f}]` |
/// | `GET` | `/sessions/{id}/estimates` | |
/// | `PATCH` | `/sessions/{id}/config` | [`ConfigUpdate`] |
/// | `GET` | `/datasets` | |
pub fn router(service: Service) -> Router {
    Router::new()
        .route("/datasets", get(datasets))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(state))
        .route("/sessions/{id}/draws", post(draws))
        .route("/sessions/{id}/labels", post(labels))
        .route("/sessions/{id}/estimates", get(estimates))
        .route("/sessions/{id}/config", patch(config))
        .fallback(not_found)
        .with_state(service)
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        message: "no such route".into(),
    }
}

async fn datasets(State(svc): State<Service>) -> impl IntoResponse {
    Json(svc.datasets())
}

async fn create(
    State(svc): State<Service>,
    body: std::result::Result<Json<SessionConfig>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(config) = body?;
    let id = svc.create_session(config)?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn state(State(svc): State<Service>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.state(&id)?))
}

async fn draws(
    State(svc): State<Service>,
    Path(id): Path<String>,
    query: std::result::Result<Query<DrawQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let batch = svc.draw_batch(&id, q.n)?;
    Ok(Json(json!({ "draws": batch })))
}

async fn labels(
    State(svc): State<Service>,
    Path(id): Path<String>,
    body: std::result::Result<Json<Vec<LabelSubmission>>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(labels) = body?;
    Ok(Json(svc.submit_labels(&id, &labels)?))
}

async fn estimates(
    State(svc): State<Service>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.current_estimates(&id)?))
}

async fn config(
    State(svc): State<Service>,
    Path(id): Path<String>,
    body: std::result::Result<Json<ConfigUpdate>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(update) = body?;
    Ok(Json(svc.update_config(&id, &update)?))
}

/// Serves `router(service)` on `addr` until ctrl-c.
pub async fn serve(service: Service, addr: std::net::SocketAddr) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
