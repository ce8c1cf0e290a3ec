//! REST endpoints. Every route lives under `/api`; request and response
//! bodies are JSON.

use axum::body::Bytes;
use axum::Router;
use serde::de::DeserializeOwned;

use crate::error::ApiError;
use crate::AppState;

pub mod catalog;
pub mod learners;
pub mod monitor;
pub mod recommend;
pub mod spaces;

pub fn routes() -> Router<AppState> {
    Router::new()
        .merge(catalog::routes())
        .merge(learners::routes())
        .merge(monitor::routes())
        .merge(recommend::routes())
        .merge(spaces::routes())
}

/// Parses a JSON body that may be absent.
pub(crate) fn optional_json<T: DeserializeOwned>(body: &Bytes) -> Result<Option<T>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    serde_json::from_slice(body)
        .map(Some)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}
