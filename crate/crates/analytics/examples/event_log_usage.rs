// Feeds a platform event log (JSON Lines) straight into the usage pipeline;
// each event is read as the API request that would have produced it.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use ple_analytics::parse::{detect_format, event_request};
use ple_analytics::{run, AnalyzeConfig};
use ple_core::{Catalog, EventLog, ManualClock, SpaceService};

pub fn main() {
    let clock = ManualClock::at(Utc.with_ymd_and_hms(2013, 3, 1, 8, 0, 0).unwrap());
    let log = Arc::new(EventLog::in_memory(Arc::new(clock.clone())));
    let spaces = SpaceService::new(Arc::new(Catalog::default_catalog()), log.clone());

    spaces.create_space("diary", "eva").unwrap();
    spaces.add_widget("diary", "Start", "learning-diary", "eva").unwrap();
    spaces.add_widget("diary", "Start", "time-planner", "eva").unwrap();
    spaces.create_space("chat", "max").unwrap();
    spaces.join_space("chat", "eva").unwrap();
    spaces.add_widget("chat", "Start", "multi-user-chat", "max").unwrap();
    for day in 0..6 {
        clock.advance_days(1);
        spaces.load_space("diary", "eva").unwrap();
        if day % 2 == 0 {
            spaces.load_space("chat", "max").unwrap();
        }
    }

    for e in log.events().iter().take(4) {
        let (method, target) = event_request(e);
        println!("{} {:<14} -> {method} {target}", e.actor, e.verb.as_str());
    }

    let mut jsonl = Vec::new();
    log.write_jsonl(&mut jsonl).unwrap();
    let text = String::from_utf8(jsonl).unwrap();
    println!("format: {:?}", detect_format(&text));
    let report = run(&AnalyzeConfig::default(), &text);
    for label in &report.space_labels {
        println!(
            "{:<6} loads {} on {} days, active {}, SRL-enabled {}",
            label.space, label.loads, label.load_days, label.active, label.srl_enabled
        );
    }
    println!("{}", serde_json::to_string_pretty(&report.users).unwrap());
}
