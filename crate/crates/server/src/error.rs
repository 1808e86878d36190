use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Map, Value};

use geolab_core::accounts::{AccountError, DenyReason};
use geolab_core::recorder::RecorderError;
use geolab_core::session::SessionError;

/// An error response: `{"error": <code>, "message": <text>, ...extra}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub extra: Map<String, Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), extra: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.extra.insert(key.into(), value.into());
        self
    }

    pub fn unauthorized() -> Self {
        ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or expired token")
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn body(&self) -> Value {
        let mut body = Map::new();
        body.insert("error".into(), json!(self.code));
        body.insert("message".into(), json!(self.message));
        body.extend(self.extra.clone());
        Value::Object(body)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = %self.code, message = %self.message, "request failed");
        }
        (self.status, Json(self.body())).into_response()
    }
}

fn internal(code: &str, e: &dyn std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, code, e.to_string())
}

impl From<AccountError> for ApiError {
    fn from(e: AccountError) -> Self {
        use AccountError::*;
        let (status, code) = match &e {
            UsernameTaken => (StatusCode::CONFLICT, "UsernameTaken"),
            InvalidUsername => (StatusCode::BAD_REQUEST, "InvalidUsername"),
            AuthDenied(DenyReason::Pending) => (StatusCode::UNAUTHORIZED, "AuthDenied"),
            AuthDenied(DenyReason::BadCredential) => (StatusCode::UNAUTHORIZED, "AuthDenied"),
            Forbidden => (StatusCode::FORBIDDEN, "Forbidden"),
            NotPending => (StatusCode::CONFLICT, "NotPending"),
            UnknownUser => (StatusCode::NOT_FOUND, "UnknownUser"),
            UnknownClass => (StatusCode::NOT_FOUND, "UnknownClass"),
            UnknownConstruction => (StatusCode::NOT_FOUND, "UnknownConstruction"),
            OverlappingGroups => (StatusCode::BAD_REQUEST, "OverlappingGroups"),
            NonMember(_) => (StatusCode::BAD_REQUEST, "NonMember"),
            EmptyGroup => (StatusCode::BAD_REQUEST, "EmptyGroup"),
            InvalidPayload(_) => (StatusCode::BAD_REQUEST, "InvalidPayload"),
            Store(_) => return internal("StoreFailure", &e),
            Corrupt(_) => return internal("Corrupt", &e),
        };
        let err = ApiError::new(status, code, e.to_string());
        match e {
            AuthDenied(reason) => err.with("reason", format!("{reason:?}")),
            _ => err,
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let status = match &e {
            Forbidden => StatusCode::FORBIDDEN,
            UnknownSession | UnknownClass | UnknownGroup | UnknownTask => StatusCode::NOT_FOUND,
            ParseError(_) | EmptyMessage | MessageTooLong | InvalidConfig(_) => StatusCode::BAD_REQUEST,
            NoGroupsDefined | AlreadyClosed | NotHolder => StatusCode::CONFLICT,
            SessionClosed => StatusCode::GONE,
            Account(_) => {
                let Account(inner) = e else { unreachable!() };
                return inner.into();
            }
            Store(_) | Corrupt(_) | WorkerStopped => return internal(e.code(), &e),
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<RecorderError> for ApiError {
    fn from(e: RecorderError) -> Self {
        use RecorderError::*;
        let status = match &e {
            Forbidden => StatusCode::FORBIDDEN,
            UnknownLog => StatusCode::NOT_FOUND,
            TimestampRegression { .. } | InvalidEvent(_) | NonPositiveSpeed | IndexOutOfRange { .. } | Format(_) => {
                StatusCode::BAD_REQUEST
            }
            LogFinished | UnfinishedLog | EndOfLog => StatusCode::CONFLICT,
            Account(_) => {
                let Account(inner) = e else { unreachable!() };
                return inner.into();
            }
            Store(_) | Corrupt(_) => return internal(e.code(), &e),
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
