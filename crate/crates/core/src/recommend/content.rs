use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::learner::{Competence, CompetenceKey, LearnerRecord};

use super::{sort_recommendations, Recommendation, RecommendationKind, RecommendError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningObject {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub text: String,
    /// Concept ids or labels.
    #[serde(default)]
    pub tags: Vec<String>,
}

/// Local learning-object index, stored as a JSON array of objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentCorpus {
    pub objects: Vec<LearningObject>,
}

impl ContentCorpus {
    pub fn new(objects: Vec<LearningObject>) -> Self {
        ContentCorpus { objects }
    }

    pub fn from_json(text: &str) -> Result<Self, RecommendError> {
        serde_json::from_str(text).map_err(|e| RecommendError::Corpus(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecommendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RecommendError::Corpus(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

struct QueryConcept {
    id: String,
    label: String,
}

fn query_concepts(catalog: &Catalog, learner: &LearnerRecord) -> Vec<QueryConcept> {
    let mut keys: BTreeSet<(String, String)> = learner
        .goals
        .values()
        .filter_map(|c| match c {
            Competence::Domain { concept, context, .. } => Some((context.clone(), concept.clone())),
            _ => None,
        })
        .collect();
    for entry in learner.gap().entries {
        if let CompetenceKey::Domain { context, concept } = entry.key {
            keys.insert((context, concept));
        }
    }
    keys.into_iter()
        .map(|(context, id)| {
            let label = catalog
                .concept(&context, &id)
                .map_or_else(|| id.clone(), |c| c.label.clone());
            QueryConcept { id, label }
        })
        .collect()
}

/// Learning objects matching the learner's domain goals.
///
/// An object scores one point per query concept named by one of its tags
/// (id or label, case-insensitive). Untagged objects fall back to concept
/// labels found in the title. Objects scoring 0 are left out.
pub fn recommend_content(
    catalog: &Catalog,
    learner: &LearnerRecord,
    corpus: Option<&ContentCorpus>,
) -> Result<Vec<Recommendation>, RecommendError> {
    let corpus = corpus.ok_or(RecommendError::CorpusUnavailable)?;
    let concepts = query_concepts(catalog, learner);
    if concepts.is_empty() {
        return Ok(Vec::new());
    }

    let mut recs = Vec::new();
    for object in &corpus.objects {
        let tags: BTreeSet<String> = object.tags.iter().map(|t| t.to_lowercase()).collect();
        let title = object.title.to_lowercase();
        let mut reasons = Vec::new();
        for c in &concepts {
            let hit = if tags.is_empty() {
                title.contains(&c.label.to_lowercase())
            } else {
                tags.contains(&c.id.to_lowercase()) || tags.contains(&c.label.to_lowercase())
            };
            if hit {
                reasons.push(format!("about {}", c.label));
            }
        }
        if !reasons.is_empty() {
            recs.push(Recommendation {
                kind: RecommendationKind::Content,
                item_id: object.id.clone(),
                score: reasons.len() as u32,
                add_count: 0,
                reasons,
            });
        }
    }
    sort_recommendations(&mut recs);
    Ok(recs)
}
