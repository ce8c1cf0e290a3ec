// Space lifecycle over an append-only log: every change is an event, and the
// spaces rebuilt from a JSON Lines copy of the log equal the live ones.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use ple_core::event::read_jsonl;
use ple_core::space::{replay_spaces, SpaceError};
use ple_core::{Catalog, EventLog, Layout, ManualClock, SpaceService};
use serde_json::json;

pub fn main() {
    let clock = ManualClock::at(Utc.with_ymd_and_hms(2012, 11, 5, 14, 0, 0).unwrap());
    let log = Arc::new(EventLog::in_memory(Arc::new(clock.clone())));
    let catalog = Arc::new(Catalog::default_catalog());
    let spaces = SpaceService::new(catalog, log.clone());

    spaces.create_space("merovingians", "eva").unwrap();
    spaces.join_space("merovingians", "max").unwrap();
    let map = spaces.add_widget("merovingians", "Start", "mind-map", "eva").unwrap();
    let pad = spaces.add_widget("merovingians", "Start", "note-pad", "max").unwrap();
    spaces.set_layout("merovingians", &map.instance_id, Layout::new(0, 0, 2, 2), "eva").unwrap();
    spaces.put_shared("merovingians", "topic", json!("Clovis I"), "max").unwrap();
    clock.advance_days(1);
    spaces.load_space("merovingians", "eva").unwrap();
    spaces.remove_widget("merovingians", &pad.instance_id, "eva").unwrap();

    match spaces.add_widget("merovingians", "Start", "mind-map", "ida") {
        Err(SpaceError::NotAMember { learner, .. }) => println!("{learner} is turned away, nothing logged"),
        other => panic!("unexpected {other:?}"),
    }

    let mut jsonl = Vec::new();
    log.write_jsonl(&mut jsonl).unwrap();
    print!("{}", String::from_utf8_lossy(&jsonl));

    let replayed = replay_spaces(&read_jsonl(jsonl.as_slice()).unwrap()).unwrap();
    assert_eq!(replayed, spaces.snapshot());
    let recovered = SpaceService::recover(Arc::new(Catalog::default_catalog()), log).unwrap();
    let space = recovered.get("merovingians").unwrap();
    println!(
        "replayed {} space(s); merovingians has {} widget(s), members {:?}, share url {}",
        replayed.len(),
        space.widget_count(),
        space.member_ids(),
        recovered.share_url("merovingians").unwrap()
    );
    println!("mind-map added {} time(s) so far", recovered.catalog().add_count("mind-map").unwrap());
}
