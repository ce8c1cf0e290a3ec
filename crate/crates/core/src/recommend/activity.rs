//! Learning-activity scheduler.
//!
//! The scheduler walks the phase cycle plan → prepare → learn → reflect and
//! recommends the strategy accepted longest ago, so a run without skips
//! offers every strategy once per round and accepted counts never differ by
//! more than one. Ties among strategies never accepted go to the cursor phase,
//! then the phases after it. A skipped entity is held back for the next
//! `skip_cooldown` recommendations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, EntityRef, Phase, Strategy};
use crate::learner::LearnerRecord;

use super::{Recommendation, RecommendationKind, RecommendError};

pub const DEFAULT_SKIP_COOLDOWN: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub skip_cooldown: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            skip_cooldown: DEFAULT_SKIP_COOLDOWN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pending {
    pub recommendation: Recommendation,
    /// Technique recommendations offered after a drill-down.
    pub drilled: Vec<Recommendation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub learner: String,
    /// Accepted recommendations per strategy.
    pub counts: BTreeMap<String, u32>,
    /// Entity (`strategy:<id>` / `technique:<id>`) to remaining held-back steps.
    pub cooldowns: BTreeMap<String, u32>,
    /// Strategy to the acceptance number (1-based) it was last accepted at.
    #[serde(default)]
    pub last_accepted: BTreeMap<String, u64>,
    #[serde(default)]
    pub accepted: u64,
    pub cursor: Phase,
    pub pending: Option<Pending>,
}

impl SchedulerState {
    pub fn new(learner: impl Into<String>) -> Self {
        SchedulerState {
            learner: learner.into(),
            counts: BTreeMap::new(),
            cooldowns: BTreeMap::new(),
            last_accepted: BTreeMap::new(),
            accepted: 0,
            cursor: Phase::Plan,
            pending: None,
        }
    }

    pub fn count(&self, strategy: &str) -> u32 {
        self.counts.get(strategy).copied().unwrap_or(0)
    }

    fn cooling(&self, entity: &str) -> bool {
        self.cooldowns.get(entity).is_some_and(|&n| n > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Skipped,
    DrillDown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeResult {
    pub state: SchedulerState,
    /// Ranked techniques, for a drill-down.
    pub techniques: Option<Vec<Recommendation>>,
    /// Technique the learner applied, for an accepted technique.
    pub applied: Option<String>,
}

fn strategy_entity(id: &str) -> String {
    EntityRef::Strategy(id.to_string()).to_string()
}

/// Recommends the next strategy and returns the updated state.
pub fn next_activity(
    catalog: &Catalog,
    state: &SchedulerState,
    _config: &SchedulerConfig,
) -> (Recommendation, SchedulerState) {
    let mut next = state.clone();
    let turn = |s: &Strategy| state.last_accepted.get(&s.id).copied();
    let free = |s: &&Strategy| !state.cooling(&strategy_entity(&s.id));
    let traversal: Vec<(Phase, &Strategy)> = std::iter::successors(Some(state.cursor), |p| Some(p.next()))
        .take(Phase::ALL.len())
        .flat_map(|p| catalog.strategies_in(p).map(move |s| (p, s)))
        .collect();
    // min_by_key keeps the first of equals, so ties follow the traversal.
    let (phase, strategy) = traversal
        .iter()
        .filter(|(_, s)| free(s))
        .min_by_key(|(_, s)| turn(s))
        // Everything held back: ignore cooldowns rather than stall.
        .or_else(|| traversal.iter().min_by_key(|(_, s)| turn(s)))
        .copied()
        .expect("catalog has at least one strategy");

    let mut reasons = vec![format!("{phase} phase")];
    reasons.push(match turn(strategy) {
        None => "not practised yet".to_string(),
        Some(_) => format!("least recently practised ({} accepted)", state.count(&strategy.id)),
    });
    let rec = Recommendation {
        kind: RecommendationKind::Activity,
        item_id: strategy_entity(&strategy.id),
        score: 1,
        add_count: 0,
        reasons,
    };

    next.cursor = phase;
    next.cooldowns = state
        .cooldowns
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(k, &n)| (k.clone(), n - 1))
        .collect();
    next.pending = Some(Pending {
        recommendation: rec.clone(),
        drilled: Vec::new(),
    });
    (rec, next)
}

/// Techniques of a strategy, those the learner already has a tool competence
/// for first, then by id.
fn drill_down(
    catalog: &Catalog,
    strategy: &str,
    learner: &LearnerRecord,
) -> Result<Vec<Recommendation>, RecommendError> {
    let competent: std::collections::BTreeSet<&str> =
        learner.tool_competences().map(|(_, t)| t).collect();
    let mut recs: Vec<Recommendation> = catalog
        .techniques_for(strategy)?
        .into_iter()
        .map(|t| {
            let familiar = competent.contains(t.id.as_str());
            Recommendation {
                kind: RecommendationKind::Activity,
                item_id: EntityRef::Technique(t.id.clone()).to_string(),
                score: if familiar { 2 } else { 1 },
                add_count: 0,
                reasons: if familiar {
                    vec![format!("you can already apply {} with a tool", t.name)]
                } else {
                    vec![format!("technique of {strategy}")]
                },
            }
        })
        .collect();
    super::sort_recommendations(&mut recs);
    Ok(recs)
}

/// Applies the learner's reaction to the pending recommendation.
pub fn record_outcome(
    catalog: &Catalog,
    learner: &LearnerRecord,
    state: &SchedulerState,
    rec: &Recommendation,
    outcome: Outcome,
    config: &SchedulerConfig,
) -> Result<OutcomeResult, RecommendError> {
    let pending = state
        .pending
        .as_ref()
        .filter(|p| p.recommendation.item_id == rec.item_id || p.drilled.iter().any(|d| d.item_id == rec.item_id))
        .ok_or_else(|| RecommendError::StaleRecommendation(rec.item_id.clone()))?;
    let entity: EntityRef = rec
        .item_id
        .parse()
        .map_err(RecommendError::InvalidOutcome)?;
    let mut next = state.clone();
    let mut result = OutcomeResult {
        state: SchedulerState::new(""),
        techniques: None,
        applied: None,
    };

    match outcome {
        Outcome::Accepted => {
            let strategy = match &entity {
                EntityRef::Strategy(s) => s.clone(),
                EntityRef::Technique(t) => {
                    result.applied = Some(t.clone());
                    catalog
                        .strategy_of_technique(t)
                        .map(|s| s.id.clone())
                        .ok_or_else(|| RecommendError::InvalidOutcome(format!("unknown technique {t}")))?
                }
                EntityRef::Phase(_) => {
                    return Err(RecommendError::InvalidOutcome(
                        "phases are not recommended".into(),
                    ))
                }
            };
            next.accepted += 1;
            next.last_accepted.insert(strategy.clone(), next.accepted);
            *next.counts.entry(strategy).or_insert(0) += 1;
            next.pending = None;
        }
        Outcome::Skipped => {
            next.cooldowns
                .insert(rec.item_id.clone(), config.skip_cooldown);
            next.pending = None;
        }
        Outcome::DrillDown => {
            let EntityRef::Strategy(strategy) = &entity else {
                return Err(RecommendError::InvalidOutcome(
                    "only strategies can be drilled into".into(),
                ));
            };
            let techniques: Vec<Recommendation> = drill_down(catalog, strategy, learner)?
                .into_iter()
                .filter(|t| !state.cooling(&t.item_id))
                .collect();
            next.pending = Some(Pending {
                recommendation: pending.recommendation.clone(),
                drilled: techniques.clone(),
            });
            result.techniques = Some(techniques);
        }
    }
    result.state = next;
    Ok(result)
}
