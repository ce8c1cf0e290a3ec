//! HTTP front end of the learning platform: the REST API under `/api`, the
//! `/rt` frame channel and an optional Combined Log Format access log.
//!
//! ```no_run
//! # async fn demo() -> std::io::Result<()> {
//! use ple_server::{serve, AppState};
//!
//! let state = AppState::in_memory();
//! let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
//! serve(listener, state, None).await
//! # }
//! ```

use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::routing::get;
use axum::Router;
use ple_core::{Catalog, EventLog, Platform, SystemClock};

pub mod access_log;
pub mod api;
pub mod auth;
pub mod cli;
pub mod error;
pub mod rt;

pub use access_log::SharedWriter;
pub use auth::Sessions;
pub use error::ApiError;

#[derive(Clone)]
pub struct AppState {
    pub platform: Arc<Platform>,
    pub sessions: Arc<Sessions>,
    /// Where manual technique assignments are kept between runs.
    pub assignments: Option<PathBuf>,
}

impl AppState {
    pub fn new(platform: Platform) -> Self {
        AppState {
            platform: Arc::new(platform),
            sessions: Arc::new(Sessions::default()),
            assignments: None,
        }
    }

    /// Default catalog, in-memory log, wall clock.
    pub fn in_memory() -> Self {
        let catalog = Arc::new(Catalog::default_catalog());
        let log = Arc::new(EventLog::in_memory(Arc::new(SystemClock)));
        AppState::new(Platform::with_log(catalog, log).expect("empty log replays"))
    }

    /// Loads earlier assignments from `path` (if it exists) and saves every
    /// new one back to it.
    pub fn with_assignments(mut self, path: PathBuf) -> Result<Self, ple_core::monitor::MonitorError> {
        if path.exists() {
            let file = File::open(&path).map_err(|e| ple_core::monitor::MonitorError::Store(e.to_string()))?;
            self.platform.monitor.load_assignments(BufReader::new(file))?;
        }
        self.assignments = Some(path);
        Ok(self)
    }

    pub(crate) fn persist_assignments(&self) -> Result<(), ApiError> {
        let Some(path) = &self.assignments else {
            return Ok(());
        };
        let file = File::create(path).map_err(|e| ApiError::new(
            axum::http::StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            e.to_string(),
        ))?;
        Ok(self.platform.monitor.save_assignments(file)?)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .merge(api::routes())
        .route("/rt", get(rt::upgrade))
        .with_state(state)
}

/// The router with request logging in front.
pub fn logged_router(state: AppState, access_log: SharedWriter) -> Router {
    router(state).layer(axum::middleware::from_fn_with_state(access_log, access_log::log_request))
}

pub fn shared_writer(w: impl std::io::Write + Send + 'static) -> SharedWriter {
    Arc::new(Mutex::new(Box::new(w)))
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    access_log: Option<SharedWriter>,
) -> std::io::Result<()> {
    let app = match access_log {
        Some(w) => logged_router(state, w),
        None => router(state),
    };
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>()).await
}
