// A learner session against the REST API, served in-process: log in, build a
// space from recommendations, take an activity and read back the open
// learner model.

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use ple_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Value {
    let mut req = Request::builder().method(method.clone()).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    println!("{:<6} {uri:<58} {status}", method.as_str());
    serde_json::from_slice(&bytes).unwrap_or(Value::Null)
}

async fn walkthrough() {
    let app = router(AppState::in_memory());
    let session = call(&app, Method::POST, "/api/session", None, Some(json!({ "learner": "eva" }))).await;
    let t = session["token"].as_str().map(str::to_owned);
    let t = t.as_deref();

    let goal = json!({ "kind": "srl", "strategy": "organisation", "level": 3 });
    call(&app, Method::POST, "/api/learners/eva/goals", t, Some(goal)).await;
    call(&app, Method::POST, "/api/spaces?name=merovingians", t, None).await;
    let ranked = call(&app, Method::GET, "/api/recommend/widgets?entity=strategy:organisation", t, None).await;
    let top = ranked[0]["item_id"].as_str().unwrap().to_string();
    let added = call(&app, Method::POST, &format!("/api/spaces/merovingians/widgets?widget={top}"), t, None).await;
    let iid = added["instance_id"].as_str().unwrap().to_string();
    call(&app, Method::GET, &format!("/api/spaces/merovingians/widgets/{iid}/load?widget={top}"), t, None).await;
    let lint = call(&app, Method::GET, "/api/spaces/merovingians/lint", t, None).await;

    let activity = call(&app, Method::GET, "/api/recommend/activity", t, None).await;
    let outcome = json!({ "item_id": activity["item_id"], "outcome": "accepted" });
    call(&app, Method::POST, "/api/recommend/activity", t, Some(outcome)).await;
    let feed = call(&app, Method::GET, "/api/learners/eva/feed", t, None).await;
    let denied = call(&app, Method::GET, "/api/learners/max/feed", t, None).await;

    println!("\ntop widget for organisation: {top}");
    println!("lint: {lint}");
    println!("activity offered: {}", activity["item_id"]);
    println!("gap: {}", feed["gap"]);
    println!("uses: {}", feed["uses"]);
    println!("someone else's feed: {denied}");
}

pub fn main() {
    tokio::runtime::Runtime::new().unwrap().block_on(walkthrough());
}
