use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dss_core::assessment::AssessmentError;
use serde_json::{Map, Value};

/// An error as the API reports it: `{"code", "message", ...details}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    /// Extra top-level fields, e.g. the new phase after a deadline.
    pub details: Map<String, Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no session {id}"))
    }

    pub fn storage(err: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", err.to_string())
    }

    pub fn body(&self) -> Value {
        let mut body = Map::new();
        body.insert("code".into(), self.code.into());
        body.insert("message".into(), self.message.clone().into());
        body.extend(self.details.clone());
        Value::Object(body)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<AssessmentError> for ApiError {
    fn from(err: AssessmentError) -> Self {
        let message = err.to_string();
        match err {
            AssessmentError::InvalidBackground(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-background", message)
            }
            AssessmentError::DeadlineExpired { phase, complete } => {
                Self::new(StatusCode::GONE, "deadline-expired", message)
                    .with("phase", serde_json::to_value(phase).unwrap())
                    .with("complete", complete)
            }
            AssessmentError::WrongPhase { phase } => Self::new(StatusCode::CONFLICT, "wrong-phase", message)
                .with("phase", serde_json::to_value(phase).unwrap()),
            AssessmentError::UnknownQuestion(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown-question", message)
            }
            AssessmentError::InvalidChoice { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-choice", message)
            }
            AssessmentError::PhaseIncomplete => Self::new(StatusCode::CONFLICT, "not-finalized", message),
            AssessmentError::Bank(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "bank", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        (self.status, Json(self.body())).into_response()
    }
}
