use axum::extract::{Query, State};
use axum::routing::get;
use axum::{Json, Router};
use ple_core::recommend::OutcomeResult;
use ple_core::{EntityRef, Outcome, Recommendation};
use serde::Deserialize;

use crate::auth::Learner;
use crate::error::ApiError;
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/recommend/widgets", get(widgets))
        .route("/api/recommend/activity", get(next_activity).post(outcome))
        .route("/api/recommend/content", get(content))
}

#[derive(Deserialize)]
struct WidgetQuery {
    entity: String,
    learner: Option<String>,
}

async fn widgets(
    State(s): State<AppState>,
    learner: Learner,
    Query(q): Query<WidgetQuery>,
) -> Result<Json<Vec<Recommendation>>, ApiError> {
    if let Some(l) = &q.learner {
        learner.require_self(l)?;
    }
    let entity: EntityRef = q.entity.parse().map_err(ApiError::bad_request)?;
    Ok(Json(s.platform.recommend_widgets(&entity, &learner.id)?))
}

async fn next_activity(State(s): State<AppState>, learner: Learner) -> Result<Json<Recommendation>, ApiError> {
    Ok(Json(s.platform.next_activity(&learner.id)?))
}

#[derive(Deserialize)]
struct OutcomeBody {
    item_id: String,
    outcome: Outcome,
}

async fn outcome(
    State(s): State<AppState>,
    learner: Learner,
    Json(body): Json<OutcomeBody>,
) -> Result<Json<OutcomeResult>, ApiError> {
    Ok(Json(s.platform.activity_outcome(&learner.id, &body.item_id, body.outcome)?))
}

async fn content(State(s): State<AppState>, learner: Learner) -> Result<Json<Vec<Recommendation>>, ApiError> {
    Ok(Json(s.platform.recommend_content(&learner.id)?))
}
