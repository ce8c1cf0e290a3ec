//! Report emitters.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::report::{GeoRow, UsageReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
            _ => OutputFormat::Json,
        }
    }
}

pub fn to_json(report: &UsageReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// One `section,key,value` row per scalar of the JSON report. Nulls become
/// empty cells.
pub fn write_csv(report: &UsageReport, out: impl Write) -> csv::Result<()> {
    let value = serde_json::to_value(report).expect("report serializes");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["section", "key", "value"])?;
    let Value::Object(sections) = value else { unreachable!("report is an object") };
    for (section, v) in &sections {
        let mut rows = Vec::new();
        flatten("", v, &mut rows);
        for (key, value) in rows {
            w.write_record([section.as_str(), key.as_str(), value.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv(report: &UsageReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

/// City and country counts for map rendering.
pub fn geo_csv(rows: &[GeoRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["city", "country", "requests", "ips"]).expect("memory");
    for r in rows {
        w.serialize((&r.city, &r.country, r.requests, r.ips)).expect("memory");
    }
    String::from_utf8(w.into_inner().expect("memory")).expect("utf-8")
}
