use std::sync::Arc;

use axum::extract::{FromRequestParts, Query};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use serde::Deserialize;
use tokio::sync::watch;

use geolab_core::accounts::{Accounts, AuthToken, Principal};
use geolab_core::recorder::Recorder;
use geolab_core::session::SessionEngine;

use crate::error::ApiError;

#[derive(Clone)]
pub struct AppState {
    pub accounts: Arc<Accounts>,
    pub sessions: Arc<SessionEngine>,
    pub recorder: Arc<Recorder>,
    /// Flips to true when the server starts shutting down.
    pub shutdown: watch::Receiver<bool>,
}

/// The authenticated principal behind a request. The token comes from an
/// `Authorization: Bearer` header, or from a `token` query parameter for
/// clients that cannot set headers (browser WebSockets).
pub struct Caller {
    pub principal: Principal,
    pub token: AuthToken,
}

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let from_header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(|t| t.trim().to_string());
        let token = match from_header {
            Some(t) => t,
            None => Query::<TokenQuery>::try_from_uri(&parts.uri)
                .ok()
                .and_then(|q| q.0.token)
                .ok_or_else(ApiError::unauthorized)?,
        };
        let token = AuthToken(token);
        let principal = state.accounts.resolve(&token).ok_or_else(ApiError::unauthorized)?;
        Ok(Caller { principal, token })
    }
}
