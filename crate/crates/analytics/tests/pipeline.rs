use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use ple_analytics::output::{to_csv, to_json};
use ple_analytics::report::{classify_spaces, distribution, ActiveRule, NO_CATEGORY};
use ple_analytics::{run, synth, AccessLogEntry, AnalyzeConfig, BotPatterns, GeoTable, OpKind, Operation, PartnerSet};
use ple_core::{Catalog, EventLog, ManualClock, SpaceService};
use proptest::prelude::*;

fn entry(ip: &str, minute: i64, method: &str, resource: &str, agent: &str) -> String {
    AccessLogEntry {
        ip: ip.into(),
        ts: Utc.with_ymd_and_hms(2013, 5, 2, 8, 0, 0).unwrap() + Duration::minutes(minute),
        method: method.into(),
        resource: resource.into(),
        status: 200,
        bytes: 100,
        user_agent: agent.into(),
    }
    .to_clf()
}

fn synthetic_config(world: &synth::SyntheticWorld) -> AnalyzeConfig {
    AnalyzeConfig {
        bots: BotPatterns::parse(world.bots).unwrap(),
        partners: PartnerSet::parse(world.partners).unwrap(),
        geo: GeoTable::parse(world.geo).unwrap(),
        ..AnalyzeConfig::default()
    }
}

#[test]
fn crawlers_are_removed() {
    let mut lines = Vec::new();
    for i in 0..10 {
        lines.push(entry(&format!("10.0.0.{i}"), i, "GET", "/api/spaces/a", "Mozilla/5.0"));
    }
    lines.push(entry("10.0.0.1", 20, "GET", "/api/spaces/a", "Googlebot/2.1"));
    lines.push(entry("10.0.0.2", 21, "GET", "/api/spaces/a", "YandexBot/3.0"));
    let config = AnalyzeConfig { bots: BotPatterns::parse("bot\n").unwrap(), ..AnalyzeConfig::default() };
    let r = run(&config, &lines.join("\n"));
    assert_eq!((r.totals.api_requests, r.totals.removed_bots), (10, 2));
}

#[test]
fn partner_traffic_and_identity_filters() {
    let log = [
        entry("137.226.1.1", 0, "GET", "/api/spaces/a", "Mozilla"),
        entry("137.226.9.9", 1, "POST", "/api/spaces/a/members", "Mozilla"),
        entry("8.8.8.8", 2, "GET", "/api/spaces/a", "Mozilla"),
    ]
    .join("\n");
    let filtered = AnalyzeConfig { partners: PartnerSet::parse("137.226.0.0/16").unwrap(), ..AnalyzeConfig::default() };
    let r = run(&filtered, &log);
    assert_eq!((r.totals.removed_partners, r.totals.api_requests), (2, 1));
    let r = run(&AnalyzeConfig::default(), &log);
    assert_eq!((r.totals.removed_bots, r.totals.removed_partners, r.totals.api_requests), (0, 0, 3));
}

#[test]
fn empty_log_gives_a_zeroed_report() {
    let r = run(&AnalyzeConfig::default(), "");
    assert_eq!(r.totals.lines, 0);
    assert_eq!(r.spaces.active_pct, None);
    assert_eq!(r.spaces.mean_srl_lifetime_days, None);
    assert_eq!(r.users.creators.pct, None);
    assert!(r.categories.srl.categories.iter().all(|c| c.pct.is_none()));
    assert!(r.daily.is_empty() && r.geo.is_empty());
    let json: serde_json::Value = serde_json::from_str(&to_json(&r)).unwrap();
    assert!(json["spaces"]["active_pct"].is_null());
}

fn op(kind: OpKind, space: &str, widget: Option<&str>, day: i64) -> Operation {
    Operation {
        kind,
        actor: "1.1.1.1".into(),
        space: space.into(),
        widget: widget.map(Into::into),
        ts: Utc.with_ymd_and_hms(2013, 1, 1, 12, 0, 0).unwrap() + Duration::days(day),
    }
}

#[test]
fn half_of_ten_spaces_are_active() {
    let mut ops = Vec::new();
    let mut expected_active = 0;
    for s in 0..10i64 {
        // loads and distinct days per space
        let (loads, days) = [(5, 2), (9, 3), (6, 2), (5, 5), (7, 4), (4, 2), (5, 1), (20, 1), (1, 1), (0, 0)][s as usize];
        let space = format!("s{s}");
        ops.push(op(OpKind::SpaceCreate, &space, None, 0));
        for i in 0..loads {
            ops.push(op(OpKind::SpaceLoad, &space, None, i % days.max(1)));
        }
        if loads >= 5 && days >= 2 {
            expected_active += 1;
        }
    }
    let labels = classify_spaces(&ops, &BTreeSet::new(), ActiveRule::default());
    assert_eq!(expected_active, 5);
    assert_eq!(labels.iter().filter(|l| l.active).count(), 5);
    assert!(!labels[8].active, "a single load is never active");
}

#[test]
fn srl_enabled_needs_add_and_load() {
    let srl = BTreeSet::from(["self-reflection".to_string()]);
    let ops = [
        op(OpKind::WidgetAdd, "both", Some("self-reflection"), 0),
        op(OpKind::WidgetLoad, "both", Some("self-reflection"), 3),
        op(OpKind::WidgetAdd, "added", Some("self-reflection"), 0),
        op(OpKind::WidgetLoad, "added", Some("note-pad"), 1),
        op(OpKind::WidgetLoad, "loaded", Some("self-reflection"), 0),
    ];
    let labels: BTreeMap<String, (bool, i64)> = classify_spaces(&ops, &srl, ActiveRule::default())
        .into_iter()
        .map(|l| (l.space, (l.srl_enabled, l.lifetime_days)))
        .collect();
    assert_eq!(labels["both"], (true, 3));
    assert_eq!(labels["added"], (false, 1));
    assert_eq!(labels["loaded"], (false, 0));
}

#[test]
fn uncategorized_widgets_fill_the_no_category_bucket() {
    let catalog = Catalog::default_catalog();
    let d = distribution(&catalog, ["self-reflection", "media-player", "activity-recommender", "unknown-widget"]);
    for c in &d.categories {
        let want = if c.category == NO_CATEGORY { 100.0 } else { 0.0 };
        assert_eq!(c.pct, Some(want));
    }
}

/// Tally in half-additions: every catalog widget has at most two categories.
fn half_tally(catalog: &Catalog, widgets: &[String]) -> BTreeMap<String, u64> {
    let mut t = BTreeMap::new();
    for w in widgets {
        let cats: Vec<String> = catalog
            .widget(w)
            .map(|d| d.categories.iter().map(|c| c.label().to_string()).collect())
            .unwrap_or_default();
        if cats.is_empty() {
            *t.entry(NO_CATEGORY.to_string()).or_default() += 2;
        } else {
            for c in &cats {
                *t.entry(c.clone()).or_default() += 2 / cats.len() as u64;
            }
        }
    }
    t
}

proptest! {
    #[test]
    fn distribution_matches_tally(picks in proptest::collection::vec(0usize..21, 1..200)) {
        let catalog = Catalog::default_catalog();
        let ids: Vec<String> = catalog.widgets().into_iter().map(|w| w.id).collect();
        let widgets: Vec<String> = picks.iter().map(|&i| ids[i].clone()).collect();
        let tally = half_tally(&catalog, &widgets);
        let d = distribution(&catalog, widgets.iter().map(String::as_str));
        let total = 2 * widgets.len() as u64;
        let mut tenths_sum = 0;
        for c in &d.categories {
            let halves = tally.get(&c.category).copied().unwrap_or(0);
            let weight: halves::Half = c.weight.parse().unwrap();
            prop_assert_eq!(weight.0, halves);
            let pct = c.pct.unwrap();
            let exact = 100.0 * halves as f64 / total as f64;
            prop_assert!((pct - exact).abs() <= 0.1 + 1e-9, "{} {} {}", c.category, pct, exact);
            tenths_sum += (pct * 10.0).round() as u64;
        }
        prop_assert_eq!(tenths_sum, 1000);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operations_partition_api_requests(seed in 0u64..1000, lines in 0usize..400) {
        let world = synth::synthetic_world(seed, lines);
        let r = run(&synthetic_config(&world), &world.log);
        prop_assert_eq!(r.totals.classified + r.totals.unclassified, r.totals.api_requests);
        prop_assert_eq!(
            r.totals.parsed,
            r.totals.api_requests + r.totals.removed_bots + r.totals.removed_partners + r.totals.removed_static
        );
        let op_sum: u64 = r.operations.values().sum();
        prop_assert_eq!(op_sum, r.totals.api_requests);
        prop_assert!(r.users.creators.count <= r.users.active_users);
        for pct in [r.spaces.active_pct, r.spaces.srl_active_pct, r.users.creators.pct, r.users.reopeners.pct].into_iter().flatten() {
            prop_assert!((0.0..=100.0).contains(&pct));
        }
    }
}

/// Parses the reduced fractions the report emits for weights with
/// denominator 1 or 2 into half units.
mod halves {
    pub struct Half(pub u64);

    impl std::str::FromStr for Half {
        type Err = String;

        fn from_str(s: &str) -> Result<Self, String> {
            let bad = |_| s.to_string();
            match s.split_once('/') {
                None => Ok(Half(2 * s.parse::<u64>().map_err(bad)?)),
                Some((n, "2")) => Ok(Half(n.parse::<u64>().map_err(bad)?)),
                Some(_) => Err(s.to_string()),
            }
        }
    }
}

#[test]
fn reopeners_cover_every_loader() {
    let world = synth::synthetic_world(3, 3000);
    let config = synthetic_config(&world);
    let r = run(&config, &world.log);
    let loaders: BTreeSet<String> = world
        .log
        .lines()
        .filter_map(ple_analytics::parse::parse_clf_line)
        .filter(|e| !config.bots.is_bot(&e.user_agent) && !config.partners.contains(&e.ip))
        .filter_map(|e| ple_analytics::ops::classify_request(&e))
        .filter(|o| o.kind == OpKind::SpaceLoad)
        .map(|o| o.actor)
        .collect();
    assert_eq!(r.users.reopeners.count as usize, loaders.len());
    assert!(r.users.reopeners.count <= r.users.active_users);
}

#[test]
fn report_is_deterministic_and_parallel_safe() {
    let world = synth::synthetic_world(11, 4000);
    let mut config = synthetic_config(&world);
    let a = to_json(&run(&config, &world.log));
    let b = to_json(&run(&config, &world.log));
    config.parallel = true;
    let c = to_json(&run(&config, &world.log));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn unknown_locations_are_bucketed() {
    let log = [
        entry("141.20.1.1", 0, "GET", "/api/spaces/a", "Mozilla"),
        entry("203.0.113.5", 1, "GET", "/api/spaces/a", "Mozilla"),
        entry("203.0.113.6", 2, "GET", "/api/spaces/a", "Mozilla"),
    ]
    .join("\n");
    let config = AnalyzeConfig { geo: GeoTable::parse(synth::GEO).unwrap(), ..AnalyzeConfig::default() };
    let r = run(&config, &log);
    let unknown = r.geo.iter().find(|g| g.city == "unknown").unwrap();
    assert_eq!((unknown.requests, unknown.ips), (2, 2));
    assert_eq!((r.totals.cities, r.totals.countries), (1, 1));
}

#[test]
fn platform_event_logs_are_accepted() {
    let clock = Arc::new(ManualClock::at(Utc.with_ymd_and_hms(2013, 5, 2, 9, 0, 0).unwrap()));
    let log = Arc::new(EventLog::in_memory(clock.clone()));
    let spaces = SpaceService::new(Arc::new(Catalog::default_catalog()), log.clone());
    spaces.create_space("algebra", "eva").unwrap();
    spaces.join_space("algebra", "max").unwrap();
    let w = spaces.add_widget("algebra", "reflect", "self-reflection", "eva").unwrap();
    for _ in 0..3 {
        spaces.load_space("algebra", "max").unwrap();
        spaces.load_space("algebra", "eva").unwrap();
        clock.advance_days(1);
    }
    spaces.load_widget("algebra", &w.instance_id, "max").unwrap();
    spaces.put_shared("algebra", "k", serde_json::json!(1), "eva").unwrap();
    let mut buf = Vec::new();
    log.write_jsonl(&mut buf).unwrap();
    let r = run(&AnalyzeConfig::default(), std::str::from_utf8(&buf).unwrap());
    assert_eq!(r.totals.malformed, 0);
    assert_eq!(r.operations["space.load"], 6);
    assert_eq!(r.operations["unclassified"], 1);
    assert_eq!(r.users.active_users, 2);
    assert_eq!(r.users.creators.pct, Some(50.0));
    assert_eq!((r.spaces.active, r.spaces.srl_enabled, r.spaces.srl_active), (1, 1, 1));
    assert_eq!(r.spaces.mean_srl_lifetime_days, Some(3.0));
}

#[test]
fn csv_rows_mirror_the_json_scalars() {
    let r = run(&AnalyzeConfig::default(), &synth::category_fixture());
    let csv = to_csv(&r);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<(String, String, String)> = reader.deserialize().map(Result::unwrap).collect();
    let find = |s: &str, k: &str| rows.iter().find(|r| r.0 == s && r.1 == k).map(|r| r.2.clone());
    assert_eq!(find("spaces", "srl_enabled").as_deref(), Some("50"));
    assert_eq!(find("categories", "srl.categories.0.pct").as_deref(), Some("58.8"));
    assert_eq!(find("categories", "non_srl.categories.0.category").as_deref(), Some(NO_CATEGORY));
}

#[test]
fn bundled_fixture_matches_its_generator() {
    let bundled = include_str!("../data/category_fixture.log");
    assert_eq!(bundled, synth::category_fixture());
}
