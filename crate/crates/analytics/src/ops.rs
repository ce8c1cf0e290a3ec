//! Cleaning and operation extraction.

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::filters::{BotPatterns, PartnerSet};
use crate::parse::AccessLogEntry;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CleaningStats {
    pub bots: u64,
    pub partners: u64,
    pub static_content: u64,
}

/// Drops automated agents, then partner traffic, then requests outside
/// `/api/`. Each removed entry is counted under the first rule that hit it.
pub fn clean(
    entries: Vec<AccessLogEntry>,
    bots: &BotPatterns,
    partners: &PartnerSet,
) -> (Vec<AccessLogEntry>, CleaningStats) {
    let mut stats = CleaningStats::default();
    let kept = entries
        .into_iter()
        .filter(|e| {
            if bots.is_bot(&e.user_agent) {
                stats.bots += 1;
                false
            } else if partners.contains(&e.ip) {
                stats.partners += 1;
                false
            } else if !is_api(e.path()) {
                stats.static_content += 1;
                false
            } else {
                true
            }
        })
        .collect();
    (kept, stats)
}

pub fn is_api(path: &str) -> bool {
    path == "/api" || path.starts_with("/api/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OpKind {
    #[serde(rename = "space.create")]
    SpaceCreate,
    #[serde(rename = "space.join")]
    SpaceJoin,
    #[serde(rename = "space.leave")]
    SpaceLeave,
    #[serde(rename = "space.load")]
    SpaceLoad,
    #[serde(rename = "widget.add")]
    WidgetAdd,
    #[serde(rename = "widget.remove")]
    WidgetRemove,
    #[serde(rename = "widget.load")]
    WidgetLoad,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::SpaceCreate,
        OpKind::SpaceJoin,
        OpKind::SpaceLeave,
        OpKind::SpaceLoad,
        OpKind::WidgetAdd,
        OpKind::WidgetRemove,
        OpKind::WidgetLoad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::SpaceCreate => "space.create",
            OpKind::SpaceJoin => "space.join",
            OpKind::SpaceLeave => "space.leave",
            OpKind::SpaceLoad => "space.load",
            OpKind::WidgetAdd => "widget.add",
            OpKind::WidgetRemove => "widget.remove",
            OpKind::WidgetLoad => "widget.load",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Operation {
    pub kind: OpKind,
    pub actor: String,
    pub space: String,
    pub widget: Option<String>,
    pub ts: DateTime<Utc>,
}

/// Maps one API request onto the operation vocabulary. Failed requests and
/// paths outside the route table give `None`.
///
/// | method | path | operation |
/// |---|---|---|
/// | POST | `/api/spaces?name=N` | space.create |
/// | GET | `/api/spaces/N` | space.load |
/// | POST | `/api/spaces/N/members` | space.join |
/// | DELETE | `/api/spaces/N/members/L` | space.leave |
/// | POST | `/api/spaces/N/widgets?widget=W` | widget.add |
/// | DELETE | `/api/spaces/N/widgets/I?widget=W` | widget.remove |
/// | GET | `/api/spaces/N/widgets/I/load?widget=W` | widget.load |
pub fn classify_request(entry: &AccessLogEntry) -> Option<Operation> {
    if entry.status >= 400 {
        return None;
    }
    let segments: Vec<&str> = entry.path().trim_end_matches('/').split('/').skip(1).collect();
    let (kind, space) = match (entry.method.as_str(), segments.as_slice()) {
        ("POST", ["api", "spaces"]) => (OpKind::SpaceCreate, entry.query_param("name")?),
        ("GET", ["api", "spaces", s]) => (OpKind::SpaceLoad, *s),
        ("POST", ["api", "spaces", s, "members"]) => (OpKind::SpaceJoin, *s),
        ("DELETE", ["api", "spaces", s, "members", _]) => (OpKind::SpaceLeave, *s),
        ("POST", ["api", "spaces", s, "widgets"]) => (OpKind::WidgetAdd, *s),
        ("DELETE", ["api", "spaces", s, "widgets", _]) => (OpKind::WidgetRemove, *s),
        ("GET", ["api", "spaces", s, "widgets", _, "load"]) => (OpKind::WidgetLoad, *s),
        _ => return None,
    };
    if space.is_empty() {
        return None;
    }
    let widget = match kind {
        OpKind::WidgetAdd | OpKind::WidgetRemove | OpKind::WidgetLoad => {
            Some(entry.query_param("widget")?.to_string())
        }
        _ => None,
    };
    Some(Operation {
        kind,
        actor: entry.ip.clone(),
        space: space.to_string(),
        widget,
        ts: entry.ts,
    })
}

/// Classified operations in log order and the number of unclassified
/// API requests.
pub fn extract_operations(entries: &[AccessLogEntry]) -> (Vec<Operation>, u64) {
    let ops: Vec<Operation> = entries.iter().filter_map(classify_request).collect();
    let unclassified = (entries.len() - ops.len()) as u64;
    (ops, unclassified)
}
