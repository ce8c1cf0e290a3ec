use axum::extract::{Path, Query, State};
use axum::routing::get;
use axum::{Json, Router};
use ple_core::catalog::{CatalogError, Category, CatalogDocument, EntityRef, WidgetDescriptor};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/catalog", get(document))
        .route("/api/catalog/strategies", get(strategies))
        .route("/api/catalog/strategies/{id}/techniques", get(techniques))
        .route("/api/catalog/widgets", get(search))
        .route("/api/catalog/widgets/{id}", get(widget))
        .route("/api/catalog/entities/{entity}/widgets", get(entity_widgets))
        .route("/api/catalog/templates", get(templates))
        .route("/api/catalog/bundles", get(bundles))
        .route("/api/widgets/{id}/paradata", get(paradata))
}

async fn document(State(s): State<AppState>) -> Json<CatalogDocument> {
    Json(s.platform.catalog.to_document())
}

async fn strategies(State(s): State<AppState>) -> Json<Value> {
    Json(json!(s.platform.catalog.strategies()))
}

async fn techniques(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(json!(s.platform.catalog.techniques_for(&id)?)))
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
    category: Option<String>,
}

async fn search(
    State(s): State<AppState>,
    Query(query): Query<SearchQuery>,
) -> Result<Json<Vec<WidgetDescriptor>>, ApiError> {
    let category = query
        .category
        .map(|c| c.parse::<Category>().map_err(ApiError::bad_request))
        .transpose()?;
    Ok(Json(s.platform.catalog.search_widgets(&query.q, category)))
}

async fn widget(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<WidgetDescriptor>, ApiError> {
    s.platform
        .catalog
        .widget(&id)
        .map(Json)
        .ok_or_else(|| CatalogError::UnknownWidget(id).into())
}

async fn entity_widgets(
    State(s): State<AppState>,
    Path(entity): Path<String>,
) -> Result<Json<Vec<WidgetDescriptor>>, ApiError> {
    let entity: EntityRef = entity.parse().map_err(ApiError::bad_request)?;
    Ok(Json(s.platform.catalog.widgets_for(&entity)?))
}

async fn templates(State(s): State<AppState>) -> Json<Value> {
    Json(json!(s.platform.catalog.templates()))
}

async fn bundles(State(s): State<AppState>) -> Json<Value> {
    Json(json!(s.platform.catalog.bundles()))
}

async fn paradata(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let count = s.platform.catalog.add_count(&id)?;
    Ok(Json(json!({ "widget": id, "add_count": count })))
}
