use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use ple_core::monitor::{cluster_events, ClassifiedEvent, Cluster};
use ple_core::{EventSignature, StrategyProfile, Verb};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::auth::Learner;
use crate::error::ApiError;
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/monitor/{learner}/clusters", get(clusters))
        .route("/api/monitor/{learner}/suggest", get(suggest))
        .route("/api/monitor/{learner}/assign", post(assign))
        .route("/api/monitor/{learner}/profile", get(profile))
}

async fn clusters(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
) -> Result<Json<Vec<Cluster>>, ApiError> {
    learner.require_self(&id)?;
    Ok(Json(cluster_events(&s.platform.learner_events(&id))))
}

#[derive(Deserialize)]
struct SignatureParams {
    verb: Verb,
    object_type: String,
    source: Option<String>,
}

impl SignatureParams {
    fn signature(&self) -> EventSignature {
        EventSignature::new(self.verb, &self.object_type, self.source.as_deref())
    }
}

async fn suggest(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
    Query(q): Query<SignatureParams>,
) -> Result<Json<Value>, ApiError> {
    learner.require_self(&id)?;
    let signature = q.signature();
    let technique = s.platform.monitor.suggest(&id, &signature);
    Ok(Json(json!({ "signature": signature, "technique": technique })))
}

#[derive(Deserialize)]
struct AssignBody {
    #[serde(flatten)]
    signature: SignatureParams,
    technique: String,
}

async fn assign(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
    Json(body): Json<AssignBody>,
) -> Result<(StatusCode, Json<StrategyProfile>), ApiError> {
    learner.require_self(&id)?;
    let now = s.platform.log.clock().now();
    s.platform.monitor.assign(&id, body.signature.signature(), &body.technique, now)?;
    s.persist_assignments()?;
    Ok((StatusCode::CREATED, Json(s.platform.strategy_profile(&id))))
}

/// Both reflection views: the classified event sequence and the per-strategy
/// counts.
#[derive(Serialize)]
struct ProfileDocument {
    learner: String,
    sequence: Vec<ClassifiedEvent>,
    profile: StrategyProfile,
}

async fn profile(
    State(s): State<AppState>,
    learner: Learner,
    Path(id): Path<String>,
) -> Result<Json<ProfileDocument>, ApiError> {
    learner.require_self(&id)?;
    let events = s.platform.learner_events(&id);
    let doc = ProfileDocument {
        sequence: s.platform.monitor.classify(&id, &events),
        profile: s.platform.monitor.profile(&id, &events),
        learner: id,
    };
    Ok(Json(doc))
}
