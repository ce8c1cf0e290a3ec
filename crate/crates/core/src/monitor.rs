//! SRL monitoring: maps logged learner actions to techniques and strategies.
//!
//! Events are grouped by [`EventSignature`]. A learner may assign the
//! technique they actually applied to a signature; later events with the
//! same signature are then classified by majority vote over those
//! assignments. Signatures nobody has assigned fall back to a default
//! strategy table.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::event::{ts_millis, ActivityEvent, Verb};

const DEFAULT_TABLE: &str = include_str!("../data/monitor_defaults.toml");

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("unknown technique `{0}`")]
    UnknownTechnique(String),
    #[error("default mapping: {0}")]
    Defaults(String),
    #[error("assignment store: {0}")]
    Store(String),
}

/// What kind of action an event records, independent of who, when and where.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventSignature {
    pub verb: Verb,
    pub object_type: String,
    /// Widget the action came from, if any.
    pub source: Option<String>,
}

impl EventSignature {
    pub fn of(event: &ActivityEvent) -> Self {
        EventSignature {
            verb: event.verb,
            object_type: event.object_type.clone(),
            source: event.detail_str("widget_id").map(str::to_string),
        }
    }

    pub fn new(verb: Verb, object_type: impl Into<String>, source: Option<&str>) -> Self {
        EventSignature {
            verb,
            object_type: object_type.into(),
            source: source.map(str::to_string),
        }
    }

    fn generic(&self) -> Self {
        EventSignature {
            source: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualAssignment {
    pub learner: String,
    pub signature: EventSignature,
    pub technique: String,
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Deserialize)]
struct DefaultsFile {
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    mapping: Vec<MappingRow>,
}

#[derive(Debug, Deserialize)]
struct MappingRow {
    verb: Verb,
    object_type: String,
    source: Option<String>,
    strategy: String,
}

/// Signature to strategy table used when no assignment applies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefaultMapping {
    entries: BTreeMap<EventSignature, String>,
}

impl DefaultMapping {
    /// The shipped table, resolved against `catalog`.
    pub fn standard(catalog: &Catalog) -> Self {
        Self::from_toml_str(DEFAULT_TABLE, catalog).expect("shipped mapping is valid")
    }

    pub fn standard_text() -> &'static str {
        DEFAULT_TABLE
    }

    pub fn load(path: impl AsRef<Path>, catalog: &Catalog) -> Result<Self, MonitorError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MonitorError::Defaults(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, catalog)
    }

    pub fn from_toml_str(text: &str, catalog: &Catalog) -> Result<Self, MonitorError> {
        let file: DefaultsFile =
            toml::from_str(text).map_err(|e| MonitorError::Defaults(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for row in file.mapping {
            let strategy = file.aliases.get(&row.strategy).unwrap_or(&row.strategy);
            if catalog.strategy(strategy).is_none() {
                return Err(MonitorError::Defaults(format!(
                    "unknown strategy `{}`",
                    row.strategy
                )));
            }
            entries.insert(
                EventSignature {
                    verb: row.verb,
                    object_type: row.object_type,
                    source: row.source,
                },
                strategy.clone(),
            );
        }
        Ok(DefaultMapping { entries })
    }

    pub fn insert(&mut self, signature: EventSignature, strategy: impl Into<String>) {
        self.entries.insert(signature, strategy.into());
    }

    /// Exact signature first, then the source-independent entry.
    pub fn lookup(&self, signature: &EventSignature) -> Option<&str> {
        self.entries
            .get(signature)
            .or_else(|| self.entries.get(&signature.generic()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Manual assignments in insertion order plus the default table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentStore {
    pub manual: Vec<ManualAssignment>,
    pub defaults: DefaultMapping,
}

/// Majority technique among `votes` (in insertion order); ties go to the
/// technique voted for most recently.
fn majority<'a>(votes: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut tally: HashMap<&str, (usize, usize)> = HashMap::new();
    for (i, t) in votes.enumerate() {
        let e = tally.entry(t).or_insert((0, 0));
        e.0 += 1;
        e.1 = i;
    }
    tally
        .into_iter()
        .max_by_key(|&(_, (count, last))| (count, last))
        .map(|(t, _)| t.to_string())
}

impl AssignmentStore {
    pub fn new(defaults: DefaultMapping) -> Self {
        AssignmentStore {
            manual: Vec::new(),
            defaults,
        }
    }

    pub fn push(&mut self, assignment: ManualAssignment) {
        self.manual.push(assignment);
    }

    /// The learner's own majority for the signature, else the majority across
    /// all learners, else none.
    pub fn suggest(&self, learner: &str, signature: &EventSignature) -> Option<String> {
        let matching = || self.manual.iter().filter(|a| &a.signature == signature);
        majority(
            matching()
                .filter(|a| a.learner == learner)
                .map(|a| a.technique.as_str()),
        )
        .or_else(|| majority(matching().map(|a| a.technique.as_str())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationSource {
    Assigned,
    Default,
    Unclassified,
}

/// One row of the event sequence view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedEvent {
    pub event: ActivityEvent,
    pub signature: EventSignature,
    pub technique: Option<String>,
    pub strategy: Option<String>,
    pub source: ClassificationSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    /// Every catalog strategy, including those with no events.
    pub counts: BTreeMap<String, u64>,
    pub unclassified: u64,
}

impl StrategyProfile {
    pub fn total(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.unclassified
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub signature: EventSignature,
    pub occurrences: usize,
}

/// Groups events by signature, most frequent first (ties by signature).
pub fn cluster_events(events: &[ActivityEvent]) -> Vec<Cluster> {
    let mut groups: BTreeMap<EventSignature, usize> = BTreeMap::new();
    for e in events {
        *groups.entry(EventSignature::of(e)).or_insert(0) += 1;
    }
    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .map(|(signature, occurrences)| Cluster {
            signature,
            occurrences,
        })
        .collect();
    clusters.sort_by_key(|c| std::cmp::Reverse(c.occurrences));
    clusters
}

/// Classifies each event: assigned or suggested technique first, then the
/// default table.
pub fn classify(
    catalog: &Catalog,
    store: &AssignmentStore,
    learner: &str,
    events: &[ActivityEvent],
) -> Vec<ClassifiedEvent> {
    let mut cache: HashMap<EventSignature, Option<String>> = HashMap::new();
    events
        .iter()
        .map(|event| {
            let signature = EventSignature::of(event);
            let technique = cache
                .entry(signature.clone())
                .or_insert_with(|| store.suggest(learner, &signature))
                .clone();
            let assigned = technique
                .as_deref()
                .and_then(|t| catalog.strategy_of_technique(t))
                .map(|s| s.id.clone());
            let (strategy, source) = match assigned {
                Some(s) => (Some(s), ClassificationSource::Assigned),
                None => match store.defaults.lookup(&signature) {
                    Some(s) => (Some(s.to_string()), ClassificationSource::Default),
                    None => (None, ClassificationSource::Unclassified),
                },
            };
            ClassifiedEvent {
                event: event.clone(),
                signature,
                technique,
                strategy,
                source,
            }
        })
        .collect()
}

pub fn strategy_profile(
    catalog: &Catalog,
    store: &AssignmentStore,
    learner: &str,
    events: &[ActivityEvent],
) -> StrategyProfile {
    let mut profile = StrategyProfile {
        counts: catalog.strategies().iter().map(|s| (s.id.clone(), 0)).collect(),
        unclassified: 0,
    };
    for row in classify(catalog, store, learner, events) {
        match row.strategy {
            Some(s) => *profile.counts.entry(s).or_insert(0) += 1,
            None => profile.unclassified += 1,
        }
    }
    profile
}

/// Thread-safe assignment store bound to a catalog.
pub struct Monitor {
    catalog: Arc<Catalog>,
    store: RwLock<AssignmentStore>,
}

impl Monitor {
    pub fn new(catalog: Arc<Catalog>) -> Self {
        let defaults = DefaultMapping::standard(&catalog);
        Self::with_defaults(catalog, defaults)
    }

    pub fn with_defaults(catalog: Arc<Catalog>, defaults: DefaultMapping) -> Self {
        Monitor {
            catalog,
            store: RwLock::new(AssignmentStore::new(defaults)),
        }
    }

    pub fn assign(
        &self,
        learner: &str,
        signature: EventSignature,
        technique: &str,
        ts: DateTime<Utc>,
    ) -> Result<(), MonitorError> {
        if self.catalog.technique(technique).is_none() {
            return Err(MonitorError::UnknownTechnique(technique.to_string()));
        }
        self.store.write().expect("monitor poisoned").push(ManualAssignment {
            learner: learner.to_string(),
            signature,
            technique: technique.to_string(),
            ts,
        });
        Ok(())
    }

    pub fn suggest(&self, learner: &str, signature: &EventSignature) -> Option<String> {
        self.store.read().expect("monitor poisoned").suggest(learner, signature)
    }

    pub fn classify(&self, learner: &str, events: &[ActivityEvent]) -> Vec<ClassifiedEvent> {
        classify(&self.catalog, &self.store.read().expect("monitor poisoned"), learner, events)
    }

    pub fn profile(&self, learner: &str, events: &[ActivityEvent]) -> StrategyProfile {
        strategy_profile(&self.catalog, &self.store.read().expect("monitor poisoned"), learner, events)
    }

    pub fn assignments(&self) -> Vec<ManualAssignment> {
        self.store.read().expect("monitor poisoned").manual.clone()
    }

    /// Manual assignments as JSON Lines.
    pub fn save_assignments(&self, mut out: impl std::io::Write) -> Result<(), MonitorError> {
        for a in self.assignments() {
            let line = serde_json::to_string(&a).expect("assignment serializes");
            writeln!(out, "{line}").map_err(|e| MonitorError::Store(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load_assignments(&self, input: impl std::io::BufRead) -> Result<usize, MonitorError> {
        let mut loaded = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| MonitorError::Store(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let a: ManualAssignment = serde_json::from_str(&line)
                .map_err(|e| MonitorError::Store(format!("line {}: {e}", i + 1)))?;
            if self.catalog.technique(&a.technique).is_none() {
                return Err(MonitorError::UnknownTechnique(a.technique));
            }
            loaded.push(a);
        }
        let n = loaded.len();
        self.store.write().expect("monitor poisoned").manual.extend(loaded);
        Ok(n)
    }
}
