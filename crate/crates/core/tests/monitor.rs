use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use ple_core::monitor::{
    cluster_events, strategy_profile, AssignmentStore, DefaultMapping, ManualAssignment,
};
use ple_core::{ActivityEvent, Catalog, EventSignature, Verb};
use proptest::prelude::*;
use serde_json::json;

const KINDS: [(Verb, &str, Option<&str>); 6] = [
    (Verb::WidgetAction, "tag.add", Some("text-reader")),
    (Verb::WidgetAction, "tag.remove", Some("text-reader")),
    (Verb::CompetenceSet, "competence", None),
    (Verb::WidgetAdd, "widget", Some("mind-map")),
    (Verb::ChatPost, "chat", None),
    (Verb::SpaceLoad, "space", None),
];
const TECHNIQUES: [&str; 4] = ["note_taking", "summarising", "self_evaluation", "scheduling"];
const LEARNERS: [&str; 3] = ["eva", "max", "ida"];

fn event(kind: usize, space: usize) -> ActivityEvent {
    let (verb, object_type, widget) = KINDS[kind];
    ActivityEvent {
        ts: Utc.with_ymd_and_hms(2013, 5, 2, 9, 0, 0).unwrap(),
        actor: "eva".into(),
        verb,
        object_type: object_type.into(),
        object_id: "o".into(),
        space: Some(format!("s{space}")),
        details: widget.map_or(json!({}), |w| json!({ "widget_id": w })),
    }
}

fn signature(kind: usize) -> EventSignature {
    let (verb, object_type, widget) = KINDS[kind];
    EventSignature::new(verb, object_type, widget)
}

fn assignment() -> impl Strategy<Value = (usize, usize, usize)> {
    (0..3usize, 0..6usize, 0..4usize)
}

fn store_from(catalog: &Catalog, list: &[(usize, usize, usize)]) -> AssignmentStore {
    let mut store = AssignmentStore::new(DefaultMapping::standard(catalog));
    for (i, &(l, k, t)) in list.iter().enumerate() {
        store.push(ManualAssignment {
            learner: LEARNERS[l].into(),
            signature: signature(k),
            technique: TECHNIQUES[t].into(),
            ts: Utc.timestamp_opt(1_367_000_000 + i as i64, 0).unwrap(),
        });
    }
    store
}

/// Vote count with the most recent vote winning ties, written independently
/// of the library version.
fn vote(list: &[(usize, usize, usize)], learner: Option<usize>, kind: usize) -> Option<&'static str> {
    let votes: Vec<usize> = list
        .iter()
        .filter(|&&(l, k, _)| k == kind && learner.is_none_or(|x| x == l))
        .map(|&(_, _, t)| t)
        .collect();
    let mut counts = [0usize; 4];
    for &t in &votes {
        counts[t] += 1;
    }
    let top = *counts.iter().max()?;
    if top == 0 {
        return None;
    }
    votes.iter().rev().find(|&&t| counts[t] == top).map(|&t| TECHNIQUES[t])
}

proptest! {
    #[test]
    fn profile_conserves_events(
        kinds in proptest::collection::vec((0..6usize, 0..3usize), 0..80),
        list in proptest::collection::vec(assignment(), 0..20),
    ) {
        let catalog = Catalog::default_catalog();
        let store = store_from(&catalog, &list);
        let events: Vec<_> = kinds.iter().map(|&(k, s)| event(k, s)).collect();
        let profile = strategy_profile(&catalog, &store, "eva", &events);
        prop_assert_eq!(profile.total() as usize, events.len());
        prop_assert_eq!(&profile, &strategy_profile(&catalog, &store, "eva", &events));
        let clustered: usize = cluster_events(&events).iter().map(|c| c.occurrences).sum();
        prop_assert_eq!(clustered, events.len());
    }

    #[test]
    fn suggestion_matches_vote_count(list in proptest::collection::vec(assignment(), 0..30)) {
        let catalog = Catalog::default_catalog();
        let store = store_from(&catalog, &list);
        for (l, learner) in LEARNERS.iter().enumerate() {
            for k in 0..6 {
                let expected = vote(&list, Some(l), k).or_else(|| vote(&list, None, k));
                let got = store.suggest(learner, &signature(k));
                prop_assert_eq!(got.as_deref(), expected);
            }
        }
    }
}

#[test]
fn hand_computed_profile() {
    let catalog = Catalog::default_catalog();
    // eva maps tag.add to summarising (organisation); tag.remove stays on the
    // default (elaboration)
    let store = store_from(&catalog, &[(0, 0, 1)]);
    let kinds = [0, 0, 1, 1, 1, 2, 3, 4, 5, 5];
    let events: Vec<_> = kinds.iter().map(|&k| event(k, 0)).collect();
    let p = strategy_profile(&catalog, &store, "eva", &events);
    let nonzero: BTreeMap<_, _> = p.counts.iter().filter(|(_, &n)| n > 0).map(|(k, &n)| (k.as_str(), n)).collect();
    assert_eq!(
        nonzero,
        BTreeMap::from([
            ("organisation", 2),
            ("elaboration", 3),
            ("self_monitoring", 1),
            ("environment_preparation", 1),
        ])
    );
    assert_eq!(p.unclassified, 3);
}
