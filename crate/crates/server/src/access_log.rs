//! Combined Log Format request logging, readable by the analytics pipeline.

use std::io::Write;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{ConnectInfo, Request, State};
use axum::http::header::{CONTENT_LENGTH, USER_AGENT};
use axum::middleware::Next;
use axum::response::Response;
use chrono::Utc;
use ple_analytics::AccessLogEntry;

pub type SharedWriter = Arc<Mutex<Box<dyn Write + Send>>>;

pub async fn log_request(State(out): State<SharedWriter>, request: Request, next: Next) -> Response {
    let ip = request
        .extensions()
        .get::<ConnectInfo<SocketAddr>>()
        .map_or_else(|| "-".to_string(), |c| c.0.ip().to_string());
    let method = request.method().to_string();
    let resource = request.uri().path_and_query().map_or("/", |p| p.as_str()).to_string();
    let user_agent = request
        .headers()
        .get(USER_AGENT)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .replace('"', "'");
    let response = next.run(request).await;
    let bytes = response
        .headers()
        .get(CONTENT_LENGTH)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    let entry = AccessLogEntry {
        ip,
        ts: Utc::now(),
        method,
        resource,
        status: response.status().as_u16(),
        bytes,
        user_agent,
    };
    if let Ok(mut w) = out.lock() {
        let _ = writeln!(w, "{}", entry.to_clf());
        let _ = w.flush();
    }
    response
}
