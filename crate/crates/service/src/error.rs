use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use harmonica_core::control::ErrorBody;
use harmonica_core::{Error, ValidationError};

/// An error response: `{code, message, field?}` with a matching status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody { code: code.into(), message: message.into(), field: None },
        }
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::BAD_REQUEST, "invalid", message);
        let field = field.into();
        e.body.field = (!field.is_empty()).then_some(field);
        e
    }

    /// Nests the field path under `prefix`.
    pub fn within(mut self, prefix: &str) -> Self {
        self.body.field = Some(match self.body.field.take() {
            Some(f) if f.starts_with('[') => format!("{prefix}{f}"),
            Some(f) => format!("{prefix}.{f}"),
            None => prefix.to_string(),
        });
        self
    }
}

impl From<ValidationError> for ApiError {
    fn from(e: ValidationError) -> Self {
        ApiError::invalid(e.field, e.message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(v) => v.into(),
            Error::UnknownPolicy(name) => ApiError::not_found("unknown_policy", format!("unknown policy `{name}`")),
            Error::UnknownModel(_) | Error::UnknownVersion(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
            Error::Dataset { line, .. } => {
                let mut err = ApiError::new(StatusCode::BAD_REQUEST, "invalid_dataset", e.to_string());
                err.body.field = Some(format!("line {line}"));
                err
            }
            Error::InsufficientData { .. } | Error::InvalidInput(_) | Error::Config(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid", e.to_string())
            }
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string())
    }
}

/// Maps a JSON decoding failure to a 400 naming the offending path.
pub fn json_error(e: serde_path_to_error::Error<serde_json::Error>) -> ApiError {
    let path = e.path().to_string();
    let field = if path == "." { String::new() } else { path };
    ApiError::invalid(field, e.into_inner().to_string())
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
