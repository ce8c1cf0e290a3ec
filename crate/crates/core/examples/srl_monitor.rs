// Reflection support: clusters a learner's logged actions, lets the learner
// tag one kind of action with a technique, then shows how others are
// offered that tag and how the strategy profile changes.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use ple_core::event::Clock;
use ple_core::{Catalog, EventSignature, EventLog, ManualClock, Platform, Verb};

pub fn main() {
    let clock = ManualClock::at(Utc.with_ymd_and_hms(2013, 5, 2, 10, 0, 0).unwrap());
    let platform = Platform::with_log(
        Arc::new(Catalog::default_catalog()),
        Arc::new(EventLog::in_memory(Arc::new(clock.clone()))),
    )
    .unwrap();
    let spaces = &platform.spaces;
    spaces.create_space("history", "eva").unwrap();
    spaces.join_space("history", "max").unwrap();
    let reader = spaces.add_widget("history", "Start", "text-reader", "eva").unwrap();
    for (i, tag) in ["Clovis", "Soissons", "Tours"].into_iter().enumerate() {
        clock.advance_ms(30_000);
        spaces
            .widget_action("history", &reader.instance_id, "eva", "tag.add", serde_json::json!({ "paragraph": i, "tag": tag }))
            .unwrap();
    }
    platform.load_widget("history", &reader.instance_id, "eva").unwrap();

    let events = platform.learner_events("eva");
    println!("eva's clusters:");
    for c in ple_core::monitor::cluster_events(&events) {
        let s = &c.signature;
        println!("  {:>2} x {} {} {}", c.occurrences, s.verb.as_str(), s.object_type, s.source.as_deref().unwrap_or(""));
    }
    println!("profile before: {:?}", nonzero(&platform.strategy_profile("eva")));

    let tagging = EventSignature::new(Verb::WidgetAction, "tag.add", Some("text-reader"));
    platform.monitor.assign("eva", tagging.clone(), "tagging", clock.now()).unwrap();
    println!("profile after tagging tag.add: {:?}", nonzero(&platform.strategy_profile("eva")));
    println!("suggested to max for the same action: {:?}", platform.monitor.suggest("max", &tagging));

    for row in platform.monitor.classify("eva", &events) {
        println!(
            "  {:<14} {:<12} {:<14} {:?}",
            row.event.verb.as_str(),
            row.event.object_type,
            row.strategy.as_deref().unwrap_or("-"),
            row.source
        );
    }
}

fn nonzero(profile: &ple_core::StrategyProfile) -> Vec<(String, u64)> {
    let mut rows: Vec<(String, u64)> =
        profile.counts.iter().filter(|(_, &n)| n > 0).map(|(k, &n)| (k.clone(), n)).collect();
    rows.push(("unclassified".into(), profile.unclassified));
    rows
}
