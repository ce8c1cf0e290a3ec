//! Widget, activity and content recommenders, plus the mashup-design lint.
//!
//! Recommenders are pure functions over snapshots of catalog, learner and
//! space state. Only accepting a recommendation (through the platform) or
//! recording a scheduler outcome changes anything.

mod activity;
mod content;
mod lint;
mod widgets;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::CatalogError;

pub use activity::{
    next_activity, record_outcome, Outcome, OutcomeResult, SchedulerConfig, SchedulerState,
    DEFAULT_SKIP_COOLDOWN,
};
pub use content::{recommend_content, ContentCorpus, LearningObject};
pub use lint::{lint_space, Finding, LintConfig, DEFAULT_MAX_WIDGETS};
pub use widgets::recommend_widgets;

pub use crate::catalog::Template;

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("recommendation `{0}` is not the one currently offered")]
    StaleRecommendation(String),
    #[error("outcome not applicable: {0}")]
    InvalidOutcome(String),
    #[error("no content corpus is loaded")]
    CorpusUnavailable,
    #[error("cannot read corpus: {0}")]
    Corpus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecommendationKind {
    Widget,
    Activity,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub kind: RecommendationKind,
    /// Widget id, `strategy:<id>`/`technique:<id>` entity, or learning object id.
    pub item_id: String,
    pub score: u32,
    /// Paradata used as the first tie-breaker; 0 for non-widget items.
    pub add_count: u64,
    pub reasons: Vec<String>,
}

/// Score descending, then add count descending, then id ascending.
pub fn ranking_order(a: &Recommendation, b: &Recommendation) -> Ordering {
    b.score
        .cmp(&a.score)
        .then_with(|| b.add_count.cmp(&a.add_count))
        .then_with(|| a.item_id.cmp(&b.item_id))
}

pub fn sort_recommendations(recs: &mut [Recommendation]) {
    recs.sort_by(ranking_order);
}
