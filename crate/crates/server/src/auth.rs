//! Opaque bearer tokens mapped to learner ids.

use std::collections::HashMap;
use std::sync::RwLock;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use rand::RngCore;

use crate::error::ApiError;
use crate::AppState;

#[derive(Debug, Default)]
pub struct Sessions {
    tokens: RwLock<HashMap<String, String>>,
}

impl Sessions {
    /// Issues a fresh 128-bit token for `learner`.
    pub fn issue(&self, learner: &str) -> String {
        let mut bytes = [0u8; 16];
        rand::rng().fill_bytes(&mut bytes);
        let token: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        self.tokens
            .write()
            .expect("sessions poisoned")
            .insert(token.clone(), learner.to_string());
        token
    }

    pub fn learner(&self, token: &str) -> Option<String> {
        self.tokens.read().expect("sessions poisoned").get(token).cloned()
    }

    pub fn revoke(&self, token: &str) -> bool {
        self.tokens.write().expect("sessions poisoned").remove(token).is_some()
    }
}

/// The learner behind the request's bearer token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Learner {
    pub id: String,
    pub token: String,
}

impl Learner {
    /// Only the learner may act on their own record.
    pub fn require_self(&self, learner: &str) -> Result<(), ApiError> {
        if self.id == learner {
            Ok(())
        } else {
            Err(ApiError::forbidden(format!("token does not belong to `{learner}`")))
        }
    }
}

impl FromRequestParts<AppState> for Learner {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, ApiError> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?
            .trim()
            .to_string();
        let id = state.sessions.learner(&token).ok_or_else(ApiError::unauthorized)?;
        Ok(Learner { id, token })
    }
}
