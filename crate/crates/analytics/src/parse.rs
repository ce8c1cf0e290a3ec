//! Access-log parsing. Accepts Combined Log Format lines or the platform's
//! own JSON-Lines events; the format is detected from the first non-empty
//! line.

use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use ple_core::{ActivityEvent, Verb};
use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;

/// One request of the raw log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccessLogEntry {
    pub ip: String,
    pub ts: DateTime<Utc>,
    pub method: String,
    /// Path including any query string.
    pub resource: String,
    pub status: u16,
    pub bytes: u64,
    pub user_agent: String,
}

impl AccessLogEntry {
    pub fn path(&self) -> &str {
        self.resource.split_once('?').map_or(&self.resource, |(p, _)| p)
    }

    pub fn query_param(&self, key: &str) -> Option<&str> {
        let (_, query) = self.resource.split_once('?')?;
        query
            .split('&')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .filter(|v| !v.is_empty())
    }

    /// Renders the entry as one Combined Log Format line.
    pub fn to_clf(&self) -> String {
        format!(
            "{} - - [{}] \"{} {} HTTP/1.1\" {} {} \"-\" \"{}\"",
            self.ip,
            self.ts.format("%d/%b/%Y:%H:%M:%S %z"),
            self.method,
            self.resource,
            self.status,
            self.bytes,
            self.user_agent
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    Combined,
    EventJsonl,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub entries: Vec<AccessLogEntry>,
    pub lines: u64,
    pub malformed: u64,
}

static CLF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"^(\S+) \S+ \S+ \[([^\]]+)\] "(\S+) (\S+)(?: \S+)?" (\d{3}) (\d+|-)(?: "([^"]*)" "([^"]*)")?"#)
        .expect("valid pattern")
});

pub fn detect_format(text: &str) -> LogFormat {
    match text.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some(l) if l.starts_with('{') => LogFormat::EventJsonl,
        _ => LogFormat::Combined,
    }
}

pub fn parse_clf_line(line: &str) -> Option<AccessLogEntry> {
    let c = CLF.captures(line)?;
    let ts = DateTime::parse_from_str(&c[2], "%d/%b/%Y:%H:%M:%S %z").ok()?;
    let status: u16 = c[5].parse().ok()?;
    if !(100..=599).contains(&status) {
        return None;
    }
    let bytes = match &c[6] {
        "-" => 0,
        b => b.parse().ok()?,
    };
    Some(AccessLogEntry {
        ip: c[1].to_string(),
        ts: ts.with_timezone(&Utc),
        method: c[3].to_string(),
        resource: c[4].to_string(),
        status,
        bytes,
        user_agent: c.get(8).map_or("", |m| m.as_str()).to_string(),
    })
}

/// The API request that would have produced `event`. Verbs outside the
/// operation vocabulary map to `/api/events/{verb}`.
pub fn event_request(event: &ActivityEvent) -> (&'static str, String) {
    let space = event.space.as_deref().unwrap_or(&event.object_id);
    let widget = event.detail_str("widget_id").unwrap_or("");
    let instance = &event.object_id;
    match event.verb {
        Verb::SpaceCreate => ("POST", format!("/api/spaces?name={space}")),
        Verb::SpaceJoin => ("POST", format!("/api/spaces/{space}/members")),
        Verb::SpaceLeave => ("DELETE", format!("/api/spaces/{space}/members/{}", event.actor)),
        Verb::SpaceLoad => ("GET", format!("/api/spaces/{space}")),
        Verb::WidgetAdd => ("POST", format!("/api/spaces/{space}/widgets?widget={widget}")),
        Verb::WidgetRemove => (
            "DELETE",
            format!("/api/spaces/{space}/widgets/{instance}?widget={widget}"),
        ),
        Verb::WidgetLoad => (
            "GET",
            format!("/api/spaces/{space}/widgets/{instance}/load?widget={widget}"),
        ),
        other => ("GET", format!("/api/events/{}", other.as_str())),
    }
}

pub fn event_entry(event: &ActivityEvent) -> AccessLogEntry {
    let (method, resource) = event_request(event);
    AccessLogEntry {
        ip: event.actor.clone(),
        ts: event.ts,
        method: method.into(),
        resource,
        status: 200,
        bytes: 0,
        user_agent: String::new(),
    }
}

fn parse_event_line(line: &str) -> Option<AccessLogEntry> {
    serde_json::from_str::<ActivityEvent>(line).ok().map(|e| event_entry(&e))
}

/// Parses every non-empty line. Unparseable lines are counted and skipped.
/// The parallel path keeps input order and gives identical output.
pub fn parse_log(text: &str, parallel: bool) -> ParsedLog {
    let parse: fn(&str) -> Option<AccessLogEntry> = match detect_format(text) {
        LogFormat::Combined => parse_clf_line,
        LogFormat::EventJsonl => parse_event_line,
    };
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let parsed: Vec<Option<AccessLogEntry>> = if parallel {
        lines.par_iter().map(|l| parse(l)).collect()
    } else {
        lines.iter().map(|l| parse(l)).collect()
    };
    let total = parsed.len() as u64;
    let entries: Vec<AccessLogEntry> = parsed.into_iter().flatten().collect();
    ParsedLog {
        malformed: total - entries.len() as u64,
        lines: total,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"137.226.58.1 - - [02/May/2013:11:02:03 +0200] "GET /api/spaces/algebra HTTP/1.1" 200 5120 "-" "Mozilla/5.0 (X11)""#;

    #[test]
    fn combined_line() {
        let e = parse_clf_line(LINE).unwrap();
        assert_eq!(e.ip, "137.226.58.1");
        assert_eq!(e.ts.to_rfc3339(), "2013-05-02T09:02:03+00:00");
        assert_eq!((e.method.as_str(), e.path(), e.status, e.bytes), ("GET", "/api/spaces/algebra", 200, 5120));
        assert_eq!(e.user_agent, "Mozilla/5.0 (X11)");
        assert_eq!(parse_clf_line(&e.to_clf()).unwrap(), e);
    }

    #[test]
    fn common_format_and_rejects() {
        let e = parse_clf_line(r#"1.2.3.4 - - [02/May/2013:11:02:03 +0000] "GET /x HTTP/1.0" 304 -"#).unwrap();
        assert_eq!((e.bytes, e.user_agent.as_str()), (0, ""));
        assert!(parse_clf_line("garbage").is_none());
        assert!(parse_clf_line(r#"1.2.3.4 - - [02/May/2013:11:02:03 +0000] "GET /x HTTP/1.0" 999 1"#).is_none());
        assert!(parse_clf_line(r#"1.2.3.4 - - [31/Foo/2013:11:02:03 +0000] "GET /x HTTP/1.0" 200 1"#).is_none());
    }

    #[test]
    fn query_params() {
        let e = parse_clf_line(
            r#"1.2.3.4 - - [02/May/2013:11:02:03 +0000] "POST /api/spaces/a/widgets?x=1&widget=note-pad HTTP/1.1" 201 0"#,
        )
        .unwrap();
        assert_eq!(e.query_param("widget"), Some("note-pad"));
        assert_eq!(e.query_param("name"), None);
        assert_eq!(e.path(), "/api/spaces/a/widgets");
    }

    #[test]
    fn detection() {
        assert_eq!(detect_format("\n  {\"ts\":1}"), LogFormat::EventJsonl);
        assert_eq!(detect_format(LINE), LogFormat::Combined);
        assert_eq!(detect_format(""), LogFormat::Combined);
    }
}
