use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use aoigram_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            details: None,
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, what)
    }

    pub fn bad_request(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, what)
    }

    pub fn internal(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, what)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match &e {
            CoreError::Csv { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            CoreError::Image(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            CoreError::UnknownParticipant(_) | CoreError::UnknownNode(_) => StatusCode::NOT_FOUND,
            CoreError::TooFewParticipants(_)
            | CoreError::NotSiblings
            | CoreError::Unresolvable(_)
            | CoreError::InvalidTree(_) => StatusCode::CONFLICT,
            CoreError::LevelOutOfRange { .. }
            | CoreError::EmptySelection
            | CoreError::InvalidArgument(_)
            | CoreError::RleFormat(_)
            | CoreError::SameParticipant
            | CoreError::UnknownPattern(_)
            | CoreError::Json(_) => StatusCode::BAD_REQUEST,
        };
        let mut err = ApiError::new(status, e.to_string());
        if let CoreError::Csv { line, .. } = e {
            err.details = Some(json!({ "line": line }));
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(Value::Object(extra)) = self.details {
            body.as_object_mut().expect("object").extend(extra);
        }
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
