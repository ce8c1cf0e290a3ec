use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use ple_core::learner::LearnerFeed;
use ple_core::{ActivityEvent, Competence, CompetenceKind, LearnerRecord};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::auth::Learner;
use crate::error::ApiError;
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/session", post(open_session).delete(close_session))
        .route("/api/learners/{id}", get(record))
        .route("/api/learners/{id}/competences", post(acquired))
        .route("/api/learners/{id}/goals", post(goal))
        .route("/api/learners/{id}/events", get(events).post(record_event))
        .route("/api/learners/{id}/parameters/{key}", put(set_parameter))
        .route("/api/learners/{id}/feed", get(feed))
}

#[derive(Deserialize)]
struct SessionBody {
    learner: String,
}

/// Issues a bearer token. Identity federation is out of scope; any
/// well-formed learner id is accepted.
async fn open_session(
    State(s): State<AppState>,
    Json(body): Json<SessionBody>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let id = body.learner.trim();
    let valid = !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.@".contains(c));
    if !valid {
        return Err(ApiError::bad_request(format!("`{id}` is not a valid learner id")));
    }
    s.platform.learners.register(id);
    let token = s.sessions.issue(id);
    Ok((StatusCode::CREATED, Json(json!({ "learner": id, "token": token }))))
}

async fn close_session(State(s): State<AppState>, learner: Learner) -> StatusCode {
    s.sessions.revoke(&learner.token);
    StatusCode::NO_CONTENT
}

async fn record(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
) -> Result<Json<LearnerRecord>, ApiError> {
    learner.require_self(&id)?;
    Ok(Json(s.platform.learners.get(&id)?))
}

async fn set(
    s: &AppState,
    learner: &Learner,
    id: &str,
    competence: Competence,
    kind: CompetenceKind,
) -> Result<Json<LearnerRecord>, ApiError> {
    learner.require_self(id)?;
    Ok(Json(s.platform.learners.set_competence(id, competence, kind)?))
}

async fn acquired(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
    Json(c): Json<Competence>,
) -> Result<Json<LearnerRecord>, ApiError> {
    set(&s, &learner, &id, c, CompetenceKind::Acquired).await
}

async fn goal(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
    Json(c): Json<Competence>,
) -> Result<Json<LearnerRecord>, ApiError> {
    set(&s, &learner, &id, c, CompetenceKind::Goal).await
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LearnerEvent {
    Application {
        technique: String,
        ts: Option<DateTime<Utc>>,
    },
    Use {
        widget: String,
    },
}

async fn record_event(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
    Json(event): Json<LearnerEvent>,
) -> Result<(StatusCode, Json<LearnerRecord>), ApiError> {
    learner.require_self(&id)?;
    let store = &s.platform.learners;
    match event {
        LearnerEvent::Application { technique, ts } => {
            let ts = ts.unwrap_or_else(|| s.platform.log.clock().now());
            store.record_application(&id, &technique, ts)?;
        }
        LearnerEvent::Use { widget } => store.record_use(&id, &widget)?,
    }
    Ok((StatusCode::CREATED, Json(store.get(&id)?)))
}

async fn events(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
) -> Result<Json<Vec<ActivityEvent>>, ApiError> {
    learner.require_self(&id)?;
    Ok(Json(s.platform.learner_events(&id)))
}

#[derive(Deserialize)]
struct ParameterBody {
    value: String,
}

async fn set_parameter(
    State(s): State<AppState>,
    learner: Learner,
    Path((id, key)): Path<(String, String)>,
    Json(body): Json<ParameterBody>,
) -> Result<StatusCode, ApiError> {
    learner.require_self(&id)?;
    s.platform.learners.set_parameter(&id, &key, &body.value);
    Ok(StatusCode::NO_CONTENT)
}

async fn feed(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
) -> Result<Json<LearnerFeed>, ApiError> {
    learner.require_self(&id)?;
    Ok(Json(s.platform.learners.feed(&id)?))
}
