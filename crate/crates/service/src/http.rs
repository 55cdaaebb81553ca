use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::Value;
use tower_http::trace::{DefaultMakeSpan, DefaultOnResponse, TraceLayer};
use tracing::Level;

use crate::error::ApiError;
use crate::service::{CreateSession, Service, SessionView, SubmitAnswer};

type Shared = State<Arc<Service>>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create))
        .route("/sessions/:id", get(session))
        .route("/sessions/:id/question", get(question))
        .route("/sessions/:id/answer", post(answer))
        .route("/sessions/:id/report", get(report))
        .route("/admin/reload-kb", post(reload_kb))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint") })
        .layer(
            TraceLayer::new_for_http()
                .make_span_with(DefaultMakeSpan::new().level(Level::INFO))
                .on_response(DefaultOnResponse::new().level(Level::INFO)),
        )
        .with_state(service)
}

/// Runs `f` off the async workers; it takes locks and touches the disk.
async fn blocking<T: Send + 'static>(
    service: Arc<Service>,
    f: impl FnOnce(&Service) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())))
}

fn body<T>(parsed: Result<Json<T>, JsonRejection>, invalid: &'static str) -> Result<T, ApiError> {
    parsed.map(|Json(t)| t).map_err(|rejection| {
        let status = rejection.status();
        let code = match status {
            StatusCode::UNPROCESSABLE_ENTITY => invalid,
            StatusCode::UNSUPPORTED_MEDIA_TYPE => "unsupported-media-type",
            _ => "malformed-json",
        };
        ApiError::new(status, code, rejection.body_text())
    })
}

async fn create(
    State(service): Shared,
    req: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body(req, "invalid-background")?;
    let view = blocking(service, move |s| s.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn session(State(service): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    blocking(service, move |s| s.session(&id)).await.map(Json)
}

async fn question(State(service): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    blocking(service, move |s| s.question(&id)).await.map(Json)
}

async fn answer(
    State(service): Shared,
    Path(id): Path<String>,
    req: Result<Json<SubmitAnswer>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let req = body(req, "invalid-answer")?;
    blocking(service, move |s| s.answer(&id, &req)).await.map(Json)
}

async fn report(
    State(service): Shared,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let raw = match params.get("format").map(String::as_str) {
        None | Some("json") => false,
        Some("raw") => true,
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid-format",
                format!("format must be json or raw, not {other:?}"),
            ))
        }
    };
    let stored = blocking(service, move |s| s.report(&id).map(|r| (id, r))).await;
    let (id, stored) = stored?;
    if raw {
        return Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], stored.raw).into_response());
    }
    let mut json = serde_json::to_value(&stored.report).expect("reports serialize");
    let obj = json.as_object_mut().expect("report is an object");
    obj.insert("session-id".into(), id.into());
    obj.insert("summary".into(), stored.report.summary().into());
    obj.insert("record".into(), serde_json::to_value(&stored.record).unwrap());
    obj.insert("scores".into(), serde_json::to_value(stored.scores).unwrap());
    Ok(Json(json).into_response())
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let value = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(|t| t.trim().to_string())
}

async fn reload_kb(State(service): Shared, headers: HeaderMap) -> Result<Json<Value>, ApiError> {
    let token = bearer(&headers);
    blocking(service, move |s| s.reload_kb(token.as_deref())).await.map(Json)
}
