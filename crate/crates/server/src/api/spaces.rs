use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{delete, get, patch, post, put};
use axum::{Json, Router};
use ple_core::realtime::{ChatMessage, PresenceState};
use ple_core::recommend::Finding;
use ple_core::space::{WidgetInstance, DEFAULT_ACTIVITY};
use ple_core::{Layout, Space};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::optional_json;
use crate::auth::Learner;
use crate::error::ApiError;
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/spaces", post(create))
        .route("/api/spaces/{name}", get(load))
        .route("/api/spaces/{name}/members", post(join))
        .route("/api/spaces/{name}/members/{learner}", delete(leave))
        .route("/api/spaces/{name}/widgets", post(add_widget))
        .route("/api/spaces/{name}/widgets/{iid}", delete(remove_widget))
        .route("/api/spaces/{name}/widgets/{iid}/load", get(load_widget))
        .route("/api/spaces/{name}/widgets/{iid}/layout", patch(set_layout))
        .route("/api/spaces/{name}/widgets/{iid}/actions", post(widget_action))
        .route("/api/spaces/{name}/store/{key}", put(put_shared))
        .route("/api/spaces/{name}/chat", get(chat))
        .route("/api/spaces/{name}/presence", get(presence))
        .route("/api/spaces/{name}/lint", get(lint))
}

/// A space as returned to a client.
#[derive(Debug, Serialize)]
pub struct SpaceView {
    pub space: Space,
    pub share_url: String,
    pub is_member: bool,
    pub online: Vec<String>,
}

fn view(s: &AppState, space: Space, learner: &str) -> SpaceView {
    SpaceView {
        share_url: s.platform.spaces.share_url(&space.name).unwrap_or_default(),
        is_member: space.is_member(learner),
        online: s.platform.hub.presence(&space.name).online.into_iter().collect(),
        space,
    }
}

#[derive(Deserialize, Default)]
struct NameParam {
    name: Option<String>,
}

async fn create(
    State(s): State<AppState>,
    learner: Learner,
    Query(q): Query<NameParam>,
    body: Bytes,
) -> Result<(StatusCode, Json<SpaceView>), ApiError> {
    let from_body: Option<NameParam> = optional_json(&body)?;
    let name = q
        .name
        .or(from_body.and_then(|b| b.name))
        .ok_or_else(|| ApiError::bad_request("missing space name"))?;
    let space = s.platform.spaces.create_space(&name, &learner.id)?;
    Ok((StatusCode::CREATED, Json(view(&s, space, &learner.id))))
}

async fn load(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
) -> Result<Json<SpaceView>, ApiError> {
    let space = s.platform.spaces.load_space(&name, &learner.id)?;
    Ok(Json(view(&s, space, &learner.id)))
}

async fn join(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
) -> Result<Json<SpaceView>, ApiError> {
    let space = s.platform.spaces.join_space(&name, &learner.id)?;
    Ok(Json(view(&s, space, &learner.id)))
}

async fn leave(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, who)): Path<(String, String)>,
) -> Result<StatusCode, ApiError> {
    learner.require_self(&who)?;
    s.platform.spaces.leave_space(&name, &who)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct WidgetParam {
    widget: Option<String>,
}

#[derive(Deserialize, Default)]
struct AddBody {
    activity: Option<String>,
    /// Set when the learner picked the widget from a recommendation list.
    #[serde(default)]
    recommended: bool,
}

async fn add_widget(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
    Query(q): Query<WidgetParam>,
    body: Bytes,
) -> Result<(StatusCode, Json<WidgetInstance>), ApiError> {
    let widget = q.widget.ok_or_else(|| ApiError::bad_request("missing `widget` parameter"))?;
    let body: AddBody = optional_json(&body)?.unwrap_or_default();
    let activity = body.activity.as_deref().unwrap_or(DEFAULT_ACTIVITY);
    let instance = if body.recommended {
        s.platform.accept_widget_recommendation(&name, activity, &widget, &learner.id)?
    } else {
        s.platform.spaces.add_widget(&name, activity, &widget, &learner.id)?
    };
    Ok((StatusCode::CREATED, Json(instance)))
}

async fn remove_widget(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, iid)): Path<(String, String)>,
) -> Result<StatusCode, ApiError> {
    s.platform.spaces.remove_widget(&name, &iid, &learner.id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn load_widget(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, iid)): Path<(String, String)>,
) -> Result<Json<WidgetInstance>, ApiError> {
    Ok(Json(s.platform.load_widget(&name, &iid, &learner.id)?))
}

async fn set_layout(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, iid)): Path<(String, String)>,
    Json(layout): Json<Layout>,
) -> Result<Json<WidgetInstance>, ApiError> {
    s.platform.spaces.set_layout(&name, &iid, layout, &learner.id)?;
    let space = s.platform.spaces.get(&name)?;
    let instance = space.instance(&iid).cloned().ok_or_else(|| ApiError::not_found(iid))?;
    Ok(Json(instance))
}

#[derive(Deserialize)]
struct ActionBody {
    action: String,
    #[serde(default)]
    data: Value,
}

async fn widget_action(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, iid)): Path<(String, String)>,
    Json(body): Json<ActionBody>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    if body.action.trim().is_empty() {
        return Err(ApiError::bad_request("empty action"));
    }
    let event = s.platform.spaces.widget_action(&name, &iid, &learner.id, &body.action, body.data)?;
    Ok((StatusCode::CREATED, Json(serde_json::to_value(event).expect("events serialize"))))
}

async fn put_shared(
    State(s): State<AppState>,
    learner: Learner,
    Path((name, key)): Path<(String, String)>,
    Json(value): Json<Value>,
) -> Result<StatusCode, ApiError> {
    s.platform.spaces.put_shared(&name, &key, value, &learner.id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct ChatQuery {
    limit: Option<usize>,
}

async fn member_only(s: &AppState, name: &str, learner: &Learner) -> Result<(), ApiError> {
    if s.platform.spaces.is_member(name, &learner.id)? {
        Ok(())
    } else {
        Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "not_a_member",
            format!("`{}` is not a member of `{name}`", learner.id),
        ))
    }
}

async fn chat(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
    Query(q): Query<ChatQuery>,
) -> Result<Json<Vec<ChatMessage>>, ApiError> {
    member_only(&s, &name, &learner).await?;
    Ok(Json(s.platform.hub.chat_history(&name, q.limit.unwrap_or(50))))
}

async fn presence(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
) -> Result<Json<PresenceState>, ApiError> {
    member_only(&s, &name, &learner).await?;
    Ok(Json(s.platform.hub.presence(&name)))
}

async fn lint(
    State(s): State<AppState>,
    learner: Learner,
    Path(name): Path<String>,
) -> Result<Json<Vec<Finding>>, ApiError> {
    Ok(Json(s.platform.lint_space(&name, &learner.id)?))
}
