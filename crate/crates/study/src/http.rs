//! JSON over HTTP.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/studies` | `{observer_id, n_per_class, seed}` | `201 {session_id, ...}` |
//! | GET | `/studies/{id}` | | session summary |
//! | GET | `/studies/{id}/next` | | `{item_id, index, total, image}` or `{complete: true}` |
//! | POST | `/studies/{id}/ratings` | `{item_id, level, idempotency_key}` | `{cursor, total, complete}` |
//! | GET | `/studies/{id}/report` | | report, `403` until complete |
//! | GET | `/healthz` | | `{status: "ok"}` |
//!
//! Errors are `{"error": message}` with a matching status code.

use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;

use crate::service::{CreateRequest, RatingRequest, StudyError, StudyService};

impl StudyError {
    pub fn status_code(&self) -> StatusCode {
        match self {
            StudyError::UnknownSession(_) => StatusCode::NOT_FOUND,
            StudyError::Sequencing { .. } | StudyError::AlreadyComplete(_) => StatusCode::CONFLICT,
            StudyError::NotComplete { .. } => StatusCode::FORBIDDEN,
            StudyError::IdempotencyConflict(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StudyError::Invalid(_) | StudyError::Sampling(_) => StatusCode::BAD_REQUEST,
            StudyError::Storage(_) | StudyError::Image { .. } | StudyError::Replay(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }
}

impl IntoResponse for StudyError {
    fn into_response(self) -> Response {
        if self.status_code().is_server_error() {
            tracing::error!("{self}");
        }
        (self.status_code(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type Shared = Arc<StudyService>;

/// Runs blocking service work (log fsync, image reads) off the async
/// workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StudyError> + Send + 'static,
) -> Result<T, StudyError> {
    tokio::task::spawn_blocking(f).await.expect("service task panicked")
}

async fn create(State(svc): State<Shared>, Json(req): Json<CreateRequest>) -> Result<Response, StudyError> {
    let view = blocking(move || svc.create_study(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn session(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, StudyError> {
    Ok(Json(svc.session_view(&id)?).into_response())
}

async fn next(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, StudyError> {
    let item = blocking(move || svc.next_item(&id)).await?;
    Ok(Json(item).into_response())
}

async fn rate(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<RatingRequest>,
) -> Result<Response, StudyError> {
    let ack = blocking(move || svc.record_rating(&id, &req)).await?;
    Ok(Json(ack).into_response())
}

async fn report(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, StudyError> {
    Ok(Json(svc.report(&id)?).into_response())
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/studies", post(create))
        .route("/studies/{id}", get(session))
        .route("/studies/{id}/next", get(next))
        .route("/studies/{id}/ratings", post(rate))
        .route("/studies/{id}/report", get(report))
        .with_state(service)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    service: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await
}
