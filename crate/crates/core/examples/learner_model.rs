// Builds a learner record through the store: acquired and goal competences,
// technique applications and tool uses, then prints the open learner model.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use ple_core::event::Clock;
use ple_core::{Catalog, Competence, CompetenceKind, EqfLevel, EventLog, LearnerStore, ManualClock};

pub fn main() {
    let clock = ManualClock::at(Utc.with_ymd_and_hms(2013, 4, 22, 9, 0, 0).unwrap());
    let log = Arc::new(EventLog::in_memory(Arc::new(clock.clone())));
    let store = LearnerStore::new(Arc::new(Catalog::default_catalog()), log.clone());
    let level = |n| EqfLevel::new(n).expect("level in 1..=8");

    store.register("eva");
    let history = |concept: &str, n| Competence::Domain {
        concept: concept.into(),
        context: "history".into(),
        level: level(n),
    };
    store.set_competence("eva", history("clovis_i", 2), CompetenceKind::Acquired).unwrap();
    store.set_competence("eva", history("clovis_i", 4), CompetenceKind::Goal).unwrap();
    store.set_competence("eva", history("merovingian_dynasty", 3), CompetenceKind::Goal).unwrap();
    store
        .set_competence("eva", Competence::Srl { strategy: "organisation".into(), level: level(3) }, CompetenceKind::Goal)
        .unwrap();
    store
        .set_competence(
            "eva",
            Competence::Tool { tool: "mind-map".into(), technique: "concept_mapping".into() },
            CompetenceKind::Acquired,
        )
        .unwrap();

    for technique in ["concept_mapping", "summarising", "self_evaluation"] {
        clock.advance_ms(60_000);
        store.record_application("eva", technique, clock.now()).unwrap();
    }
    store.record_use("eva", "mind-map").unwrap();
    store.record_use("eva", "mind-map").unwrap();

    println!("competence gap:");
    for entry in store.competence_gap("eva").entries {
        println!("  {:<40} have {} want {}", entry.key.to_string(), entry.have, entry.want);
    }
    let feed = store.feed("eva").unwrap();
    println!("strategy histogram:");
    for row in feed.strategy_histogram.iter().filter(|r| r.count > 0) {
        println!("  {:<20} {}", row.strategy, row.count);
    }
    println!("tools used: {:?}, {} events logged", feed.distinct_tools, log.len());
    println!("{}", serde_json::to_string_pretty(&feed.gap).unwrap());
}
