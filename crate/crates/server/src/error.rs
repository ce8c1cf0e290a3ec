use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ple_core::catalog::CatalogError;
use ple_core::learner::LearnerError;
use ple_core::monitor::MonitorError;
use ple_core::realtime::HubError;
use ple_core::recommend::RecommendError;
use ple_core::space::SpaceError;
use ple_core::PlatformError;
use serde_json::json;

/// An error answered as `{"error": code, "message": text}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "a valid bearer token is required")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "error": self.code, "message": self.message }));
        (self.status, body).into_response()
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let m = e.to_string();
        match e {
            CatalogError::UnknownStrategy(_)
            | CatalogError::UnknownTechnique(_)
            | CatalogError::UnknownWidget(_)
            | CatalogError::UnknownEntity(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_entity", m),
            _ => ApiError::internal(m),
        }
    }
}

impl From<SpaceError> for ApiError {
    fn from(e: SpaceError) -> Self {
        use StatusCode as S;
        let m = e.to_string();
        match e {
            SpaceError::NameTaken(_) => ApiError::new(S::CONFLICT, "name_taken", m),
            SpaceError::InvalidName(_) => ApiError::new(S::BAD_REQUEST, "invalid_name", m),
            SpaceError::UnknownSpace(_) => ApiError::new(S::NOT_FOUND, "unknown_space", m),
            SpaceError::NotAMember { .. } => ApiError::new(S::FORBIDDEN, "not_a_member", m),
            SpaceError::AlreadyMember { .. } => ApiError::new(S::CONFLICT, "already_member", m),
            SpaceError::LastMemberCannotLeave(_) => ApiError::new(S::CONFLICT, "last_member", m),
            SpaceError::UnknownWidget(_) => ApiError::new(S::NOT_FOUND, "unknown_widget", m),
            SpaceError::UnknownInstance(_) => ApiError::new(S::NOT_FOUND, "unknown_instance", m),
            SpaceError::InvalidLayout(_) => ApiError::new(S::BAD_REQUEST, "invalid_layout", m),
            SpaceError::InvalidActivity => ApiError::new(S::BAD_REQUEST, "invalid_activity", m),
            SpaceError::Log(_) => ApiError::internal(m),
        }
    }
}

impl From<LearnerError> for ApiError {
    fn from(e: LearnerError) -> Self {
        use StatusCode as S;
        let m = e.to_string();
        match e {
            LearnerError::UnknownCatalogReference(_)
            | LearnerError::UnknownTechnique(_)
            | LearnerError::UnknownWidget(_) => ApiError::new(S::UNPROCESSABLE_ENTITY, "unknown_reference", m),
            LearnerError::NonMonotonicTimestamp { .. } => ApiError::new(S::CONFLICT, "non_monotonic", m),
            LearnerError::UnknownLearner(_) => ApiError::new(S::NOT_FOUND, "unknown_learner", m),
            LearnerError::Log(_) => ApiError::internal(m),
        }
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        use StatusCode as S;
        let m = e.to_string();
        match e {
            RecommendError::Catalog(c) => c.into(),
            RecommendError::StaleRecommendation(_) => ApiError::new(S::CONFLICT, "stale_recommendation", m),
            RecommendError::InvalidOutcome(_) => ApiError::new(S::BAD_REQUEST, "invalid_outcome", m),
            RecommendError::CorpusUnavailable => ApiError::new(S::SERVICE_UNAVAILABLE, "corpus_unavailable", m),
            RecommendError::Corpus(_) => ApiError::internal(m),
        }
    }
}

impl From<MonitorError> for ApiError {
    fn from(e: MonitorError) -> Self {
        let m = e.to_string();
        match e {
            MonitorError::UnknownTechnique(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_reference", m)
            }
            _ => ApiError::internal(m),
        }
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        let m = e.to_string();
        match e {
            HubError::NotAMember { .. } => ApiError::new(StatusCode::FORBIDDEN, "not_a_member", m),
            HubError::Space(s) => s.into(),
            _ => ApiError::bad_request(m),
        }
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        match e {
            PlatformError::Catalog(e) => e.into(),
            PlatformError::Space(e) => e.into(),
            PlatformError::Learner(e) => e.into(),
            PlatformError::Recommend(e) => e.into(),
            PlatformError::Monitor(e) => e.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}
