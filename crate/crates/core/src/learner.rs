//! Per-learner state: acquired and goal competences, tool usage, applied
//! techniques and pedagogical parameters, served as an open learner model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::catalog::{Catalog, EqfLevel, Phase, StrategyGroup};
use crate::event::{ts_millis, ActivityEvent, EventLog, EventLogError, NewEvent, Verb};

/// Number of recent events included in a learner feed.
pub const FEED_RECENT_EVENTS: usize = 20;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("unknown catalog reference: {0}")]
    UnknownCatalogReference(String),
    #[error("unknown technique `{0}`")]
    UnknownTechnique(String),
    #[error("unknown widget `{0}`")]
    UnknownWidget(String),
    #[error("timestamp {given} is older than the last application at {last}")]
    NonMonotonicTimestamp {
        last: DateTime<Utc>,
        given: DateTime<Utc>,
    },
    #[error("unknown learner `{0}`")]
    UnknownLearner(String),
    #[error(transparent)]
    Log(#[from] EventLogError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Competence {
    /// Knowing a domain concept (taken from the `context` vocabulary).
    Domain {
        concept: String,
        context: String,
        level: EqfLevel,
    },
    /// Being able to apply a technique with a given tool.
    Tool { tool: String, technique: String },
    /// Being able to apply an SRL strategy.
    Srl { strategy: String, level: EqfLevel },
}

/// Identity of a competence, ignoring its level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompetenceKey {
    Domain { context: String, concept: String },
    Tool { tool: String, technique: String },
    Srl { strategy: String },
}

impl fmt::Display for CompetenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompetenceKey::Domain { context, concept } => write!(f, "domain:{context}/{concept}"),
            CompetenceKey::Tool { tool, technique } => write!(f, "tool:{tool}/{technique}"),
            CompetenceKey::Srl { strategy } => write!(f, "srl:{strategy}"),
        }
    }
}

impl Serialize for CompetenceKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl Competence {
    pub fn key(&self) -> CompetenceKey {
        match self {
            Competence::Domain {
                concept, context, ..
            } => CompetenceKey::Domain {
                context: context.clone(),
                concept: concept.clone(),
            },
            Competence::Tool { tool, technique } => CompetenceKey::Tool {
                tool: tool.clone(),
                technique: technique.clone(),
            },
            Competence::Srl { strategy, .. } => CompetenceKey::Srl {
                strategy: strategy.clone(),
            },
        }
    }

    /// Level used for gap arithmetic. Tool competences have no level: holding
    /// one counts as level 1.
    pub fn numeric_level(&self) -> u8 {
        match self {
            Competence::Domain { level, .. } | Competence::Srl { level, .. } => level.get(),
            Competence::Tool { .. } => 1,
        }
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<(), LearnerError> {
        let problem = match self {
            Competence::Domain {
                concept, context, ..
            } => catalog
                .concept(context, concept)
                .is_none()
                .then(|| format!("concept `{concept}` in vocabulary `{context}`")),
            Competence::Tool { tool, technique } => {
                if !catalog.contains_widget(tool) {
                    Some(format!("widget `{tool}`"))
                } else if catalog.technique(technique).is_none() {
                    Some(format!("technique `{technique}`"))
                } else {
                    None
                }
            }
            Competence::Srl { strategy, .. } => catalog
                .strategy(strategy)
                .is_none()
                .then(|| format!("strategy `{strategy}`")),
        };
        match problem {
            Some(p) => Err(LearnerError::UnknownCatalogReference(p)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompetenceKind {
    Acquired,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
    pub technique: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapEntry {
    pub key: CompetenceKey,
    /// 0 when the competence has not been acquired at all.
    pub have: u8,
    pub want: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompetenceGap {
    pub entries: Vec<GapEntry>,
}

impl CompetenceGap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LearnerRecord {
    pub learner_id: String,
    pub acquired: BTreeMap<CompetenceKey, Competence>,
    pub goals: BTreeMap<CompetenceKey, Competence>,
    /// Widget id to number of uses.
    pub uses: BTreeMap<String, u64>,
    pub applies: Vec<Application>,
    pub parameters: BTreeMap<String, String>,
}

impl LearnerRecord {
    pub fn new(learner_id: impl Into<String>) -> Self {
        LearnerRecord {
            learner_id: learner_id.into(),
            acquired: BTreeMap::new(),
            goals: BTreeMap::new(),
            uses: BTreeMap::new(),
            applies: Vec::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn upsert(&mut self, competence: Competence, kind: CompetenceKind) {
        let set = match kind {
            CompetenceKind::Acquired => &mut self.acquired,
            CompetenceKind::Goal => &mut self.goals,
        };
        set.insert(competence.key(), competence);
    }

    /// Goals not yet reached: absent from `acquired`, or acquired below the
    /// goal level.
    pub fn gap(&self) -> CompetenceGap {
        let entries = self
            .goals
            .iter()
            .filter_map(|(key, goal)| {
                let want = goal.numeric_level();
                let have = self.acquired.get(key).map_or(0, Competence::numeric_level);
                (have < want).then(|| GapEntry {
                    key: key.clone(),
                    have,
                    want,
                })
            })
            .collect();
        CompetenceGap { entries }
    }

    /// Distinct tools used, by id.
    pub fn distinct_tools(&self) -> Vec<String> {
        self.uses.keys().cloned().collect()
    }

    /// Strategies the learner has set as SRL goals.
    pub fn goal_strategies(&self) -> BTreeSet<String> {
        self.goals
            .values()
            .filter_map(|c| match c {
                Competence::Srl { strategy, .. } => Some(strategy.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn tool_competences(&self) -> impl Iterator<Item = (&str, &str)> {
        self.acquired.values().filter_map(|c| match c {
            Competence::Tool { tool, technique } => Some((tool.as_str(), technique.as_str())),
            _ => None,
        })
    }

    /// Applications per technique.
    pub fn application_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for a in &self.applies {
            *counts.entry(a.technique.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Applications aggregated per strategy in catalog order. Techniques
    /// without a catalog strategy are not counted.
    pub fn strategy_histogram(&self, catalog: &Catalog) -> Vec<StrategyCount> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for a in &self.applies {
            if let Some(s) = catalog.strategy_of_technique(&a.technique) {
                *counts.entry(s.id.as_str()).or_insert(0) += 1;
            }
        }
        catalog
            .strategies()
            .iter()
            .map(|s| StrategyCount {
                strategy: s.id.clone(),
                group: s.group,
                phase: s.phase,
                count: counts.get(s.id.as_str()).copied().unwrap_or(0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyCount {
    pub strategy: String,
    pub group: StrategyGroup,
    pub phase: Phase,
    pub count: u64,
}

/// The open learner model document served to the learner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerFeed {
    pub learner: String,
    pub acquired: Vec<Competence>,
    pub goals: Vec<Competence>,
    pub gap: CompetenceGap,
    pub uses: BTreeMap<String, u64>,
    pub distinct_tools: Vec<String>,
    pub applications: usize,
    pub strategy_histogram: Vec<StrategyCount>,
    pub parameters: BTreeMap<String, String>,
    pub recent_events: Vec<ActivityEvent>,
}

/// Learner records with one writer per learner.
pub struct LearnerStore {
    catalog: Arc<Catalog>,
    log: Arc<EventLog>,
    records: RwLock<HashMap<String, Arc<Mutex<LearnerRecord>>>>,
}

impl LearnerStore {
    pub fn new(catalog: Arc<Catalog>, log: Arc<EventLog>) -> Self {
        LearnerStore {
            catalog,
            log,
            records: RwLock::new(HashMap::new()),
        }
    }

    /// Rebuilds the store from logged events.
    pub fn recover(catalog: Arc<Catalog>, log: Arc<EventLog>) -> Self {
        let records = replay_learners(&log.events())
            .into_iter()
            .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
            .collect();
        LearnerStore {
            catalog,
            log,
            records: RwLock::new(records),
        }
    }

    fn slot(&self, learner: &str) -> Arc<Mutex<LearnerRecord>> {
        if let Some(r) = self.records.read().expect("learner store poisoned").get(learner) {
            return r.clone();
        }
        self.records
            .write()
            .expect("learner store poisoned")
            .entry(learner.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(LearnerRecord::new(learner))))
            .clone()
    }

    /// Creates an empty record if the learner is new. Returns true if created.
    pub fn register(&self, learner: &str) -> bool {
        let mut records = self.records.write().expect("learner store poisoned");
        if records.contains_key(learner) {
            return false;
        }
        records.insert(
            learner.to_string(),
            Arc::new(Mutex::new(LearnerRecord::new(learner))),
        );
        true
    }

    pub fn exists(&self, learner: &str) -> bool {
        self.records
            .read()
            .expect("learner store poisoned")
            .contains_key(learner)
    }

    pub fn learners(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .read()
            .expect("learner store poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn get(&self, learner: &str) -> Result<LearnerRecord, LearnerError> {
        let slot = self
            .records
            .read()
            .expect("learner store poisoned")
            .get(learner)
            .cloned()
            .ok_or_else(|| LearnerError::UnknownLearner(learner.to_string()))?;
        let record = slot.lock().expect("learner record poisoned").clone();
        Ok(record)
    }

    /// Snapshot of the learner, or an empty record for unknown learners.
    pub fn get_or_empty(&self, learner: &str) -> LearnerRecord {
        self.get(learner)
            .unwrap_or_else(|_| LearnerRecord::new(learner))
    }

    pub fn set_competence(
        &self,
        learner: &str,
        competence: Competence,
        kind: CompetenceKind,
    ) -> Result<LearnerRecord, LearnerError> {
        competence.validate(&self.catalog)?;
        let slot = self.slot(learner);
        let mut record = slot.lock().expect("learner record poisoned");
        let verb = match kind {
            CompetenceKind::Acquired => Verb::CompetenceSet,
            CompetenceKind::Goal => Verb::GoalSet,
        };
        self.log.record(
            NewEvent::new(learner, verb, "competence", competence.key().to_string())
                .with_details(serde_json::to_value(&competence).expect("competence serializes")),
        )?;
        record.upsert(competence, kind);
        Ok(record.clone())
    }

    pub fn record_application(
        &self,
        learner: &str,
        technique: &str,
        ts: DateTime<Utc>,
    ) -> Result<(), LearnerError> {
        if self.catalog.technique(technique).is_none() {
            return Err(LearnerError::UnknownTechnique(technique.to_string()));
        }
        let slot = self.slot(learner);
        let mut record = slot.lock().expect("learner record poisoned");
        if let Some(last) = record.applies.last() {
            if ts < last.ts {
                return Err(LearnerError::NonMonotonicTimestamp { last: last.ts, given: ts });
            }
        }
        let application = Application {
            ts,
            technique: technique.to_string(),
        };
        self.log.record(
            NewEvent::new(learner, Verb::TechniqueApply, "technique", technique)
                .with_details(json!({ "applied_at": ts_string(ts) })),
        )?;
        record.applies.push(application);
        Ok(())
    }

    /// Counts one use of a widget. Not logged on its own; callers record the
    /// `widget.load` event that caused it.
    pub fn record_use(&self, learner: &str, widget: &str) -> Result<(), LearnerError> {
        if !self.catalog.contains_widget(widget) {
            return Err(LearnerError::UnknownWidget(widget.to_string()));
        }
        let slot = self.slot(learner);
        let mut record = slot.lock().expect("learner record poisoned");
        *record.uses.entry(widget.to_string()).or_insert(0) += 1;
        Ok(())
    }

    pub fn set_parameter(&self, learner: &str, key: &str, value: &str) {
        let slot = self.slot(learner);
        let mut record = slot.lock().expect("learner record poisoned");
        record.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn competence_gap(&self, learner: &str) -> CompetenceGap {
        self.get_or_empty(learner).gap()
    }

    pub fn feed(&self, learner: &str) -> Result<LearnerFeed, LearnerError> {
        let record = self.get(learner)?;
        let events = self.log.for_actor(learner);
        let skip = events.len().saturating_sub(FEED_RECENT_EVENTS);
        Ok(LearnerFeed {
            learner: record.learner_id.clone(),
            acquired: record.acquired.values().cloned().collect(),
            goals: record.goals.values().cloned().collect(),
            gap: record.gap(),
            uses: record.uses.clone(),
            distinct_tools: record.distinct_tools(),
            applications: record.applies.len(),
            strategy_histogram: record.strategy_histogram(&self.catalog),
            parameters: record.parameters.clone(),
            recent_events: events.into_iter().skip(skip).collect(),
        })
    }
}

fn ts_string(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Rebuilds learner records from competence, goal, application and
/// widget-load events. Parameters are not logged and start empty.
pub fn replay_learners(events: &[ActivityEvent]) -> HashMap<String, LearnerRecord> {
    let mut out: HashMap<String, LearnerRecord> = HashMap::new();
    for e in events {
        let record = || LearnerRecord::new(e.actor.clone());
        match e.verb {
            Verb::CompetenceSet | Verb::GoalSet => {
                if let Ok(c) = serde_json::from_value::<Competence>(e.details.clone()) {
                    let kind = if e.verb == Verb::GoalSet {
                        CompetenceKind::Goal
                    } else {
                        CompetenceKind::Acquired
                    };
                    out.entry(e.actor.clone()).or_insert_with(record).upsert(c, kind);
                }
            }
            Verb::TechniqueApply => {
                let ts = e
                    .detail_str("applied_at")
                    .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
                    .map_or(e.ts, |t| t.with_timezone(&Utc));
                out.entry(e.actor.clone())
                    .or_insert_with(record)
                    .applies
                    .push(Application {
                        ts,
                        technique: e.object_id.clone(),
                    });
            }
            Verb::WidgetLoad => {
                if let Some(w) = e.detail_str("widget_id") {
                    *out.entry(e.actor.clone())
                        .or_insert_with(record)
                        .uses
                        .entry(w.to_string())
                        .or_insert(0) += 1;
                }
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::ManualClock;
    use chrono::TimeZone;

    fn store() -> (LearnerStore, Arc<EventLog>) {
        let clock = ManualClock::at(Utc.with_ymd_and_hms(2013, 3, 1, 8, 0, 0).unwrap());
        let log = Arc::new(EventLog::in_memory(Arc::new(clock)));
        (
            LearnerStore::new(Arc::new(Catalog::default_catalog()), log.clone()),
            log,
        )
    }

    fn srl(strategy: &str, level: u8) -> Competence {
        Competence::Srl {
            strategy: strategy.into(),
            level: EqfLevel::new(level).unwrap(),
        }
    }

    fn at(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2013, 3, 1, h, 0, 0).unwrap()
    }

    #[test]
    fn goal_upsert() {
        let (s, log) = store();
        let r = s.set_competence("maren", srl("self_monitoring", 4), CompetenceKind::Goal).unwrap();
        assert_eq!(r.goals.len(), 1);
        s.set_competence("maren", srl("self_monitoring", 2), CompetenceKind::Goal).unwrap();
        let r = s.set_competence("maren", srl("self_monitoring", 5), CompetenceKind::Goal).unwrap();
        assert_eq!(r.goals.len(), 1);
        assert_eq!(r.goals.values().next().unwrap().numeric_level(), 5);
        assert_eq!(log.len(), 3);
        assert!(log.events().iter().all(|e| e.verb == Verb::GoalSet));
    }

    #[test]
    fn upsert_is_idempotent() {
        let (s, _) = store();
        let a = s.set_competence("m", srl("regulation", 3), CompetenceKind::Acquired).unwrap();
        let b = s.set_competence("m", srl("regulation", 3), CompetenceKind::Acquired).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_concept_context() {
        let (s, _) = store();
        let c = Competence::Domain {
            concept: "merovingian_dynasty".into(),
            context: "astronomy".into(),
            level: EqfLevel::new(2).unwrap(),
        };
        assert!(matches!(
            s.set_competence("m", c, CompetenceKind::Goal),
            Err(LearnerError::UnknownCatalogReference(_))
        ));
    }

    #[test]
    fn applications_are_monotonic() {
        let (s, _) = store();
        s.record_application("m", "note_taking", at(10)).unwrap();
        assert_eq!(s.get("m").unwrap().applies.len(), 1);
        assert!(matches!(
            s.record_application("m", "note_taking", at(9)),
            Err(LearnerError::NonMonotonicTimestamp { .. })
        ));
        assert!(matches!(
            s.record_application("m", "juggling", at(11)),
            Err(LearnerError::UnknownTechnique(_))
        ));
        s.record_application("m", "note_taking", at(10)).unwrap();
    }

    #[test]
    fn per_technique_counts() {
        let (s, _) = store();
        s.record_application("m", "note_taking", at(1)).unwrap();
        s.record_application("m", "scheduling", at(2)).unwrap();
        s.record_application("m", "note_taking", at(3)).unwrap();
        let counts = s.get("m").unwrap().application_counts();
        assert_eq!(counts["note_taking"], 2);
        assert_eq!(counts["scheduling"], 1);
    }

    #[test]
    fn gap_arithmetic() {
        let (s, _) = store();
        s.set_competence("m", srl("regulation", 4), CompetenceKind::Goal).unwrap();
        s.set_competence("m", srl("regulation", 2), CompetenceKind::Acquired).unwrap();
        let gap = s.competence_gap("m");
        assert_eq!(
            gap.entries,
            vec![GapEntry {
                key: CompetenceKey::Srl {
                    strategy: "regulation".into()
                },
                have: 2,
                want: 4
            }]
        );
        s.set_competence("m", srl("regulation", 6), CompetenceKind::Acquired).unwrap();
        assert!(s.competence_gap("m").is_empty());
    }

    #[test]
    fn feed_for_new_and_unknown_learner() {
        let (s, _) = store();
        assert!(matches!(s.feed("ghost"), Err(LearnerError::UnknownLearner(_))));
        s.register("fresh");
        let feed = s.feed("fresh").unwrap();
        assert_eq!(feed.strategy_histogram.len(), 9);
        assert!(feed.strategy_histogram.iter().all(|c| c.count == 0));
        assert!(feed.acquired.is_empty() && feed.goals.is_empty() && feed.gap.is_empty());
    }

    #[test]
    fn feed_histogram_sums_to_applications() {
        let (s, _) = store();
        let c = Catalog::default_catalog();
        for (i, strategy) in c.strategies().iter().enumerate() {
            let t = &c.techniques_for(&strategy.id).unwrap()[0].id;
            s.record_application("m", t, at(i as u32)).unwrap();
        }
        let feed = s.feed("m").unwrap();
        assert_eq!(feed.strategy_histogram.iter().map(|c| c.count).sum::<u64>(), 9);
        assert!(feed.strategy_histogram.iter().all(|c| c.count == 1));
        assert_eq!(feed.recent_events.len(), 9);
    }

    #[test]
    fn recover_from_log() {
        let (s, log) = store();
        s.set_competence("m", srl("regulation", 4), CompetenceKind::Goal).unwrap();
        s.set_competence("m", srl("elaboration", 2), CompetenceKind::Acquired).unwrap();
        s.record_application("m", "note_taking", at(3)).unwrap();
        let again = LearnerStore::recover(Arc::new(Catalog::default_catalog()), log);
        assert_eq!(again.get("m").unwrap(), s.get("m").unwrap());
    }
}
