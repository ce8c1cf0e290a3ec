//! Space classification, cohort statistics, category distributions and the
//! assembled usage report.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use num_rational::Ratio;
use ple_core::catalog::Category;
use ple_core::Catalog;
use serde::Serialize;

use crate::filters::{GeoTable, Location};
use crate::ops::{CleaningStats, OpKind, Operation};
use crate::parse::AccessLogEntry;

pub const SCHEMA: &str = "ple-usage-report/1";
pub const NO_CATEGORY: &str = "no specific category";

/// Thresholds for calling a space active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveRule {
    pub min_loads: u32,
    pub min_days: u32,
}

impl Default for ActiveRule {
    fn default() -> Self {
        ActiveRule {
            min_loads: 5,
            min_days: 2,
        }
    }
}

/// Percentage of `num / den` rounded half-up to one decimal, or `None` when
/// the denominator is zero.
pub fn percent(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| {
        let tenths = (2000 * num as u128 + den as u128) / (2 * den as u128);
        tenths as f64 / 10.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceLabel {
    pub space: String,
    pub created: bool,
    pub loads: u64,
    pub load_days: u64,
    pub active: bool,
    pub srl_enabled: bool,
    pub lifetime_days: i64,
}

impl SpaceLabel {
    pub fn srl_active(&self) -> bool {
        self.srl_enabled && self.active
    }
}

/// Labels every space that appears in any operation, sorted by name.
pub fn classify_spaces(ops: &[Operation], srl_widgets: &BTreeSet<String>, rule: ActiveRule) -> Vec<SpaceLabel> {
    #[derive(Default)]
    struct Acc {
        created: bool,
        loads: u64,
        days: BTreeSet<NaiveDate>,
        srl_added: bool,
        srl_loaded: bool,
        first: Option<NaiveDate>,
        last: Option<NaiveDate>,
    }
    let mut spaces: BTreeMap<&str, Acc> = BTreeMap::new();
    for op in ops {
        let acc = spaces.entry(&op.space).or_default();
        let day = op.ts.date_naive();
        acc.first = Some(acc.first.map_or(day, |d| d.min(day)));
        acc.last = Some(acc.last.map_or(day, |d| d.max(day)));
        let srl = op.widget.as_ref().is_some_and(|w| srl_widgets.contains(w));
        match op.kind {
            OpKind::SpaceCreate => acc.created = true,
            OpKind::SpaceLoad => {
                acc.loads += 1;
                acc.days.insert(day);
            }
            OpKind::WidgetAdd if srl => acc.srl_added = true,
            OpKind::WidgetLoad if srl => acc.srl_loaded = true,
            _ => {}
        }
    }
    spaces
        .into_iter()
        .map(|(name, a)| SpaceLabel {
            space: name.to_string(),
            created: a.created,
            loads: a.loads,
            load_days: a.days.len() as u64,
            active: a.loads >= rule.min_loads as u64 && a.days.len() >= rule.min_days as usize,
            srl_enabled: a.srl_added && a.srl_loaded,
            lifetime_days: match (a.first, a.last) {
                (Some(f), Some(l)) => (l - f).num_days(),
                _ => 0,
            },
        })
        .collect()
}

/// Category shares of one cohort of widget additions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub adds: u64,
    pub categories: Vec<CategoryShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryShare {
    pub category: String,
    /// Exact summed weight of the additions, as a reduced fraction.
    pub weight: String,
    /// Share in percent; null when the cohort has no additions.
    pub pct: Option<f64>,
}

pub fn category_labels() -> Vec<&'static str> {
    std::iter::once(NO_CATEGORY).chain(Category::ALL.iter().map(|c| c.label())).collect()
}

/// Weight of one addition per category: `1/k` over the widget's `k`
/// categories, or all of it on [`NO_CATEGORY`].
pub fn widget_weights(catalog: &Catalog, widget: &str) -> Vec<(&'static str, Ratio<u64>)> {
    match catalog.widget(widget) {
        Some(w) if !w.categories.is_empty() => {
            let k = w.categories.len() as u64;
            w.categories.iter().map(|c| (c.label(), Ratio::new(1, k))).collect()
        }
        _ => vec![(NO_CATEGORY, Ratio::from_integer(1))],
    }
}

/// Tenths of a percent for each weight, summing to exactly 1000. Floors go
/// first; leftover tenths go to the largest remainders, earlier labels
/// winning ties.
pub fn largest_remainder(weights: &[Ratio<u64>]) -> Vec<u64> {
    let total: Ratio<u64> = weights.iter().copied().sum();
    if total == Ratio::from_integer(0) {
        return vec![0; weights.len()];
    }
    let exact: Vec<Ratio<u64>> = weights.iter().map(|w| w * 1000 / total).collect();
    let mut tenths: Vec<u64> = exact.iter().map(|e| e.to_integer()).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| exact[b].fract().cmp(&exact[a].fract()).then(a.cmp(&b)));
    let short = 1000 - tenths.iter().sum::<u64>();
    for &i in order.iter().take(short as usize) {
        tenths[i] += 1;
    }
    tenths
}

pub fn distribution<'a>(catalog: &Catalog, widgets: impl IntoIterator<Item = &'a str>) -> Distribution {
    let labels = category_labels();
    let mut sums: BTreeMap<&str, Ratio<u64>> = labels.iter().map(|l| (*l, Ratio::from_integer(0))).collect();
    let mut adds = 0;
    for w in widgets {
        adds += 1;
        for (label, weight) in widget_weights(catalog, w) {
            *sums.get_mut(label).expect("known label") += weight;
        }
    }
    let weights: Vec<Ratio<u64>> = labels.iter().map(|l| sums[l]).collect();
    let tenths = largest_remainder(&weights);
    let categories = labels
        .iter()
        .zip(weights.iter().zip(tenths))
        .map(|(label, (w, t))| CategoryShare {
            category: label.to_string(),
            weight: w.to_string(),
            pct: (adds > 0).then(|| t as f64 / 10.0),
        })
        .collect();
    Distribution { adds, categories }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    /// Additions to SRL-enabled spaces.
    pub srl: Distribution,
    /// Additions to all other spaces.
    pub non_srl: Distribution,
    /// Additions to every space.
    pub all: Distribution,
}

pub fn category_distribution(catalog: &Catalog, ops: &[Operation], labels: &[SpaceLabel]) -> CategoryReport {
    let srl_spaces: BTreeSet<&str> = labels.iter().filter(|l| l.srl_enabled).map(|l| l.space.as_str()).collect();
    let adds: Vec<(&str, bool)> = ops
        .iter()
        .filter(|o| o.kind == OpKind::WidgetAdd)
        .filter_map(|o| Some((o.widget.as_deref()?, srl_spaces.contains(o.space.as_str()))))
        .collect();
    CategoryReport {
        srl: distribution(catalog, adds.iter().filter(|a| a.1).map(|a| a.0)),
        non_srl: distribution(catalog, adds.iter().filter(|a| !a.1).map(|a| a.0)),
        all: distribution(catalog, adds.iter().map(|a| a.0)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Totals {
    pub lines: u64,
    pub malformed: u64,
    pub parsed: u64,
    pub removed_bots: u64,
    pub removed_partners: u64,
    pub removed_static: u64,
    pub api_requests: u64,
    pub distinct_ips: u64,
    pub cities: u64,
    pub countries: u64,
    pub classified: u64,
    pub unclassified: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub requests: u64,
    pub kilo_requests: f64,
    pub cumulative_requests: u64,
    pub bytes: u64,
    pub cumulative_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoRow {
    pub city: String,
    pub country: String,
    pub requests: u64,
    pub ips: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceStats {
    pub total: u64,
    pub created: u64,
    pub active: u64,
    pub active_pct: Option<f64>,
    pub srl_enabled: u64,
    pub srl_enabled_pct: Option<f64>,
    pub srl_active: u64,
    /// Share of SRL-enabled spaces that are also active.
    pub srl_active_pct: Option<f64>,
    pub mean_srl_lifetime_days: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cohort {
    pub count: u64,
    pub pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserStats {
    /// Distinct actors with at least one classified operation.
    pub active_users: u64,
    pub creators: Cohort,
    pub joiners: Cohort,
    pub widget_adders: Cohort,
    pub reopeners: Cohort,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageReport {
    pub schema: &'static str,
    pub active_rule: ActiveRuleDoc,
    pub totals: Totals,
    pub daily: Vec<DailyRow>,
    pub geo: Vec<GeoRow>,
    pub spaces: SpaceStats,
    pub space_labels: Vec<SpaceLabel>,
    pub users: UserStats,
    pub categories: CategoryReport,
    pub operations: BTreeMap<&'static str, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActiveRuleDoc {
    pub min_loads: u32,
    pub min_days: u32,
}

/// Inputs to [`aggregate`] after parsing and cleaning.
pub struct Aggregation<'a> {
    pub lines: u64,
    pub malformed: u64,
    pub parsed: u64,
    pub cleaning: CleaningStats,
    pub cleaned: &'a [AccessLogEntry],
    pub ops: &'a [Operation],
    pub unclassified: u64,
}

pub struct Context<'a> {
    pub catalog: &'a Catalog,
    pub geo: &'a GeoTable,
    pub srl_widgets: &'a BTreeSet<String>,
    pub rule: ActiveRule,
}

fn daily(entries: &[AccessLogEntry]) -> Vec<DailyRow> {
    let mut days: BTreeMap<NaiveDate, (u64, u64)> = BTreeMap::new();
    for e in entries {
        let d = days.entry(e.ts.date_naive()).or_default();
        d.0 += 1;
        d.1 += e.bytes;
    }
    let (mut cr, mut cb) = (0, 0);
    days.into_iter()
        .map(|(date, (requests, bytes))| {
            cr += requests;
            cb += bytes;
            DailyRow {
                date,
                requests,
                kilo_requests: requests as f64 / 1000.0,
                cumulative_requests: cr,
                bytes,
                cumulative_bytes: cb,
            }
        })
        .collect()
}

/// Per-location request and address counts, busiest first.
fn geo_rows(entries: &[AccessLogEntry], geo: &GeoTable) -> Vec<GeoRow> {
    let mut located: BTreeMap<&str, Location> = BTreeMap::new();
    let mut by_loc: BTreeMap<Location, (u64, BTreeSet<&str>)> = BTreeMap::new();
    for e in entries {
        let loc = located.entry(&e.ip).or_insert_with(|| geo.locate(&e.ip)).clone();
        let row = by_loc.entry(loc).or_default();
        row.0 += 1;
        row.1.insert(&e.ip);
    }
    let mut rows: Vec<GeoRow> = by_loc
        .into_iter()
        .map(|(l, (requests, ips))| GeoRow {
            city: l.city,
            country: l.country,
            requests,
            ips: ips.len() as u64,
        })
        .collect();
    rows.sort_by(|a, b| b.requests.cmp(&a.requests).then_with(|| (&a.country, &a.city).cmp(&(&b.country, &b.city))));
    rows
}

fn cohort(actors: &BTreeSet<&str>, den: u64) -> Cohort {
    Cohort {
        count: actors.len() as u64,
        pct: percent(actors.len() as u64, den),
    }
}

fn users(ops: &[Operation]) -> UserStats {
    let all: BTreeSet<&str> = ops.iter().map(|o| o.actor.as_str()).collect();
    let with = |kind: OpKind| -> BTreeSet<&str> {
        ops.iter().filter(|o| o.kind == kind).map(|o| o.actor.as_str()).collect()
    };
    let den = all.len() as u64;
    UserStats {
        active_users: den,
        creators: cohort(&with(OpKind::SpaceCreate), den),
        joiners: cohort(&with(OpKind::SpaceJoin), den),
        widget_adders: cohort(&with(OpKind::WidgetAdd), den),
        reopeners: cohort(&with(OpKind::SpaceLoad), den),
    }
}

fn space_stats(labels: &[SpaceLabel]) -> SpaceStats {
    let count = |f: &dyn Fn(&SpaceLabel) -> bool| labels.iter().filter(|l| f(l)).count() as u64;
    let total = labels.len() as u64;
    let srl_enabled = count(&|l| l.srl_enabled);
    let srl_active = count(&SpaceLabel::srl_active);
    let active = count(&|l| l.active);
    let lifetime: i64 = labels.iter().filter(|l| l.srl_enabled).map(|l| l.lifetime_days).sum();
    SpaceStats {
        total,
        created: count(&|l| l.created),
        active,
        active_pct: percent(active, total),
        srl_enabled,
        srl_enabled_pct: percent(srl_enabled, total),
        srl_active,
        srl_active_pct: percent(srl_active, srl_enabled),
        mean_srl_lifetime_days: (srl_enabled > 0).then(|| {
            let tenths = (20 * lifetime as u64 + srl_enabled) / (2 * srl_enabled);
            tenths as f64 / 10.0
        }),
    }
}

pub fn aggregate(input: Aggregation<'_>, ctx: &Context<'_>) -> UsageReport {
    let geo = geo_rows(input.cleaned, ctx.geo);
    let known: Vec<&GeoRow> = geo.iter().filter(|g| !(g.city == crate::filters::UNKNOWN && g.country == crate::filters::UNKNOWN)).collect();
    let cities: BTreeSet<(&str, &str)> = known.iter().map(|g| (g.country.as_str(), g.city.as_str())).collect();
    let countries: BTreeSet<&str> = known.iter().map(|g| g.country.as_str()).collect();
    let ips: BTreeSet<&str> = input.cleaned.iter().map(|e| e.ip.as_str()).collect();
    let labels = classify_spaces(input.ops, ctx.srl_widgets, ctx.rule);
    let mut operations: BTreeMap<&'static str, u64> = OpKind::ALL.iter().map(|k| (k.as_str(), 0)).collect();
    for op in input.ops {
        *operations.get_mut(op.kind.as_str()).expect("all kinds present") += 1;
    }
    operations.insert("unclassified", input.unclassified);
    UsageReport {
        schema: SCHEMA,
        active_rule: ActiveRuleDoc {
            min_loads: ctx.rule.min_loads,
            min_days: ctx.rule.min_days,
        },
        totals: Totals {
            lines: input.lines,
            malformed: input.malformed,
            parsed: input.parsed,
            removed_bots: input.cleaning.bots,
            removed_partners: input.cleaning.partners,
            removed_static: input.cleaning.static_content,
            api_requests: input.cleaned.len() as u64,
            distinct_ips: ips.len() as u64,
            cities: cities.len() as u64,
            countries: countries.len() as u64,
            classified: input.ops.len() as u64,
            unclassified: input.unclassified,
        },
        daily: daily(input.cleaned),
        geo,
        spaces: space_stats(&labels),
        users: users(input.ops),
        categories: category_distribution(ctx.catalog, input.ops, &labels),
        space_labels: labels,
        operations,
    }
}
