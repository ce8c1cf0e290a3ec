//! The append-only learning-event log.
//!
//! Every state change on the platform is recorded as one [`ActivityEvent`].
//! The log can be mirrored to a JSON Lines file (one event per line, UTF-8)
//! which is the durable source of truth; in-memory state is rebuilt by
//! replaying it.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Version tag of the JSON Lines event schema.
pub const EVENT_SCHEMA: &str = "ple-events/1";

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("event log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verb {
    SpaceCreate,
    SpaceJoin,
    SpaceLeave,
    SpaceLoad,
    WidgetAdd,
    WidgetRemove,
    WidgetLoad,
    WidgetLayout,
    WidgetAction,
    StorePut,
    ChatPost,
    IwcPublish,
    CompetenceSet,
    GoalSet,
    TechniqueApply,
    RecommendationShown,
    RecommendationAccepted,
    RecommendationSkipped,
}

impl Verb {
    pub const ALL: [Verb; 18] = [
        Verb::SpaceCreate,
        Verb::SpaceJoin,
        Verb::SpaceLeave,
        Verb::SpaceLoad,
        Verb::WidgetAdd,
        Verb::WidgetRemove,
        Verb::WidgetLoad,
        Verb::WidgetLayout,
        Verb::WidgetAction,
        Verb::StorePut,
        Verb::ChatPost,
        Verb::IwcPublish,
        Verb::CompetenceSet,
        Verb::GoalSet,
        Verb::TechniqueApply,
        Verb::RecommendationShown,
        Verb::RecommendationAccepted,
        Verb::RecommendationSkipped,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::SpaceCreate => "space.create",
            Verb::SpaceJoin => "space.join",
            Verb::SpaceLeave => "space.leave",
            Verb::SpaceLoad => "space.load",
            Verb::WidgetAdd => "widget.add",
            Verb::WidgetRemove => "widget.remove",
            Verb::WidgetLoad => "widget.load",
            Verb::WidgetLayout => "widget.layout",
            Verb::WidgetAction => "widget.action",
            Verb::StorePut => "store.put",
            Verb::ChatPost => "chat.post",
            Verb::IwcPublish => "iwc.publish",
            Verb::CompetenceSet => "competence.set",
            Verb::GoalSet => "goal.set",
            Verb::TechniqueApply => "technique.apply",
            Verb::RecommendationShown => "recommendation.shown",
            Verb::RecommendationAccepted => "recommendation.accepted",
            Verb::RecommendationSkipped => "recommendation.skipped",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown verb `{s}`"))
    }
}

impl Serialize for Verb {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Verb {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Millisecond-precision UTC timestamps rendered as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
pub mod ts_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// One entry of the learning-event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEvent {
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
    pub actor: String,
    pub verb: Verb,
    pub object_type: String,
    pub object_id: String,
    pub space: Option<String>,
    pub details: Value,
}

impl ActivityEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }

    pub fn detail_str(&self, key: &str) -> Option<&str> {
        self.details.get(key).and_then(Value::as_str)
    }
}

/// Everything about an event except its timestamp, which the log assigns.
#[derive(Debug, Clone)]
pub struct NewEvent {
    pub actor: String,
    pub verb: Verb,
    pub object_type: String,
    pub object_id: String,
    pub space: Option<String>,
    pub details: Value,
}

impl NewEvent {
    pub fn new(
        actor: impl Into<String>,
        verb: Verb,
        object_type: impl Into<String>,
        object_id: impl Into<String>,
    ) -> Self {
        NewEvent {
            actor: actor.into(),
            verb,
            object_type: object_type.into(),
            object_id: object_id.into(),
            space: None,
            details: Value::Object(Default::default()),
        }
    }

    pub fn in_space(mut self, space: impl Into<String>) -> Self {
        self.space = Some(space.into());
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to. Shared handles see the same time.
#[derive(Debug, Clone)]
pub struct ManualClock {
    millis: Arc<AtomicI64>,
}

impl ManualClock {
    pub fn at(start: DateTime<Utc>) -> Self {
        ManualClock {
            millis: Arc::new(AtomicI64::new(start.timestamp_millis())),
        }
    }

    pub fn advance_ms(&self, ms: i64) {
        self.millis.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn advance_days(&self, days: i64) {
        self.advance_ms(days * 86_400_000);
    }

    pub fn set(&self, ts: DateTime<Utc>) {
        self.millis.store(ts.timestamp_millis(), Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(self.millis.load(Ordering::SeqCst))
            .single()
            .expect("valid millisecond timestamp")
    }
}

fn truncate_millis(ts: DateTime<Utc>) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(ts.timestamp_millis())
        .single()
        .expect("valid millisecond timestamp")
}

struct LogState {
    events: Vec<ActivityEvent>,
    last_ts: HashMap<Option<String>, DateTime<Utc>>,
    sink: Option<BufWriter<File>>,
}

/// Shared, append-only event log.
pub struct EventLog {
    clock: Arc<dyn Clock>,
    state: Mutex<LogState>,
}

impl fmt::Debug for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventLog").field("len", &self.len()).finish()
    }
}

impl EventLog {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        EventLog {
            clock,
            state: Mutex::new(LogState {
                events: Vec::new(),
                last_ts: HashMap::new(),
                sink: None,
            }),
        }
    }

    /// Opens (or creates) a JSON Lines log file. Existing events are loaded
    /// and new events are appended to the file as they are recorded.
    pub fn open(path: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self, EventLogError> {
        let path = path.as_ref();
        let existing = if path.exists() {
            read_jsonl(BufReader::new(File::open(path)?))?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut last_ts = HashMap::new();
        for e in &existing {
            bump(&mut last_ts, e);
        }
        Ok(EventLog {
            clock,
            state: Mutex::new(LogState {
                events: existing,
                last_ts,
                sink: Some(BufWriter::new(file)),
            }),
        })
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// Stamps and appends an event. Timestamps never go backwards within a
    /// space (or within the space-less stream).
    pub fn record(&self, new: NewEvent) -> Result<ActivityEvent, EventLogError> {
        let mut state = self.state.lock().expect("event log poisoned");
        let mut ts = truncate_millis(self.clock.now());
        if let Some(last) = state.last_ts.get(&new.space) {
            ts = ts.max(*last);
        }
        let event = ActivityEvent {
            ts,
            actor: new.actor,
            verb: new.verb,
            object_type: new.object_type,
            object_id: new.object_id,
            space: new.space,
            details: new.details,
        };
        if let Some(sink) = state.sink.as_mut() {
            writeln!(sink, "{}", event.to_json_line())?;
            sink.flush()?;
        }
        bump(&mut state.last_ts, &event);
        state.events.push(event.clone());
        Ok(event)
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("event log poisoned").events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn events(&self) -> Vec<ActivityEvent> {
        self.state.lock().expect("event log poisoned").events.clone()
    }

    pub fn filtered(&self, keep: impl Fn(&ActivityEvent) -> bool) -> Vec<ActivityEvent> {
        self.state
            .lock()
            .expect("event log poisoned")
            .events
            .iter()
            .filter(|e| keep(e))
            .cloned()
            .collect()
    }

    pub fn for_actor(&self, actor: &str) -> Vec<ActivityEvent> {
        self.filtered(|e| e.actor == actor)
    }

    pub fn for_space(&self, space: &str) -> Vec<ActivityEvent> {
        self.filtered(|e| e.space.as_deref() == Some(space))
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in self.state.lock().expect("event log poisoned").events.iter() {
            writeln!(out, "{}", e.to_json_line())?;
        }
        Ok(())
    }
}

fn bump(last_ts: &mut HashMap<Option<String>, DateTime<Utc>>, e: &ActivityEvent) {
    let slot = last_ts.entry(e.space.clone()).or_insert(e.ts);
    if e.ts > *slot {
        *slot = e.ts;
    }
}

/// Parses a JSON Lines event stream, skipping blank lines.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<ActivityEvent>, EventLogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| EventLogError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}
