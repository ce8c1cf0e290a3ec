//! Reference implementation of the usage report, written from the report
//! definition without touching the analytics crate. Parsing is done by hand,
//! fractions are kept as integers over a common denominator.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use chrono::{DateTime, NaiveDate, Utc};
use serde_json::{json, Map, Value};

pub const NO_CATEGORY: &str = "no specific category";

/// Category labels in report order, after [`NO_CATEGORY`].
pub const CATEGORIES: [&str; 7] = [
    "Search & Get Recommendation",
    "Plan & Organize",
    "Communicate & Collaborate",
    "Create & Modify",
    "Train & Test",
    "Explore & View Content",
    "Reflect & Evaluate",
];

const OPS: [&str; 7] = [
    "space.create",
    "space.join",
    "space.leave",
    "space.load",
    "widget.add",
    "widget.remove",
    "widget.load",
];

/// Everything the report depends on, as plain text and tables.
pub struct UsageInput<'a> {
    pub log: &'a str,
    /// Case-insensitive literal user-agent fragments.
    pub bots: &'a str,
    pub partners: &'a str,
    pub geo: &'a str,
    /// Widget id to its category labels.
    pub categories: &'a BTreeMap<String, Vec<String>>,
    pub srl_widgets: &'a BTreeSet<String>,
    pub min_loads: u64,
    pub min_days: u64,
}

struct Entry {
    ip: String,
    ts: DateTime<Utc>,
    method: String,
    resource: String,
    status: u16,
    bytes: u64,
    agent: String,
}

fn token(s: &str) -> Option<(&str, &str)> {
    let (t, rest) = s.split_once(' ')?;
    (!t.is_empty()).then_some((t, rest))
}

fn quoted(s: &str) -> Option<(&str, &str)> {
    let s = s.strip_prefix('"')?;
    let end = s.find('"')?;
    Some((&s[..end], &s[end + 1..]))
}

fn parse_line(line: &str) -> Option<Entry> {
    let (ip, rest) = token(line)?;
    let (_, rest) = token(rest)?;
    let (_, rest) = token(rest)?;
    let rest = rest.strip_prefix('[')?;
    let (stamp, rest) = rest.split_once(']')?;
    let (request, rest) = quoted(rest.strip_prefix(' ')?)?;
    let parts: Vec<&str> = request.split(' ').collect();
    if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.is_empty()) {
        return None;
    }
    let rest = rest.strip_prefix(' ')?;
    let status_text = rest.get(..3)?;
    if !status_text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let status: u16 = status_text.parse().ok()?;
    let rest = rest[3..].strip_prefix(' ')?;
    let (bytes_text, tail) = rest.split_once(' ').unwrap_or((rest, ""));
    let bytes = if bytes_text == "-" {
        0
    } else if !bytes_text.is_empty() && bytes_text.bytes().all(|b| b.is_ascii_digit()) {
        bytes_text.parse().ok()?
    } else {
        return None;
    };
    let agent = quoted(tail)
        .and_then(|(_, r)| quoted(r.strip_prefix(' ')?))
        .map_or("", |(ua, _)| ua);
    let ts = DateTime::parse_from_str(stamp, "%d/%b/%Y:%H:%M:%S %z").ok()?;
    if !(100..600).contains(&status) {
        return None;
    }
    Some(Entry {
        ip: ip.to_string(),
        ts: ts.with_timezone(&Utc),
        method: parts[0].to_string(),
        resource: parts[1].to_string(),
        status,
        bytes,
        agent: agent.to_string(),
    })
}

fn config_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Address as a bit string, most significant bit first.
fn address_bits(ip: IpAddr) -> Vec<bool> {
    let octets: Vec<u8> = match ip {
        IpAddr::V4(a) => a.octets().to_vec(),
        IpAddr::V6(a) => a.octets().to_vec(),
    };
    octets.iter().flat_map(|o| (0..8).rev().map(move |i| o >> i & 1 == 1)).collect()
}

struct Net {
    bits: Vec<bool>,
    prefix: usize,
}

impl Net {
    fn parse(s: &str) -> Net {
        let (addr, prefix) = s.split_once('/').unwrap_or((s, ""));
        let bits = address_bits(addr.trim().parse().expect("network address"));
        let prefix = if prefix.is_empty() { bits.len() } else { prefix.trim().parse().expect("prefix length") };
        Net { bits, prefix }
    }

    fn covers(&self, ip: &str) -> bool {
        let Ok(ip) = ip.parse::<IpAddr>() else { return false };
        let bits = address_bits(ip);
        bits.len() == self.bits.len() && bits[..self.prefix] == self.bits[..self.prefix]
    }
}

fn path(resource: &str) -> &str {
    resource.split('?').next().unwrap_or(resource)
}

fn param<'a>(resource: &'a str, key: &str) -> Option<&'a str> {
    let query = resource.split_once('?')?.1;
    let value = query.split('&').find_map(|kv| {
        let (k, v) = kv.split_once('=')?;
        (k == key).then_some(v)
    })?;
    (!value.is_empty()).then_some(value)
}

struct Op {
    kind: &'static str,
    actor: String,
    space: String,
    widget: Option<String>,
    day: NaiveDate,
}

fn operation(e: &Entry) -> Option<Op> {
    if e.status >= 400 {
        return None;
    }
    let mut p = path(&e.resource);
    while let Some(s) = p.strip_suffix('/') {
        p = s;
    }
    let seg: Vec<&str> = p.split('/').skip(1).collect();
    if seg.len() < 2 || seg[0] != "api" || seg[1] != "spaces" {
        return None;
    }
    let m = e.method.as_str();
    let (kind, space) = match seg.len() {
        2 if m == "POST" => ("space.create", param(&e.resource, "name")?),
        3 if m == "GET" => ("space.load", seg[2]),
        4 if m == "POST" && seg[3] == "members" => ("space.join", seg[2]),
        5 if m == "DELETE" && seg[3] == "members" => ("space.leave", seg[2]),
        4 if m == "POST" && seg[3] == "widgets" => ("widget.add", seg[2]),
        5 if m == "DELETE" && seg[3] == "widgets" => ("widget.remove", seg[2]),
        6 if m == "GET" && seg[3] == "widgets" && seg[5] == "load" => ("widget.load", seg[2]),
        _ => return None,
    };
    if space.is_empty() {
        return None;
    }
    let widget = if kind.starts_with("widget.") {
        Some(param(&e.resource, "widget")?.to_string())
    } else {
        None
    };
    Some(Op {
        kind,
        actor: e.ip.clone(),
        space: space.to_string(),
        widget,
        day: e.ts.date_naive(),
    })
}

/// `num/den` in tenths of a percent, halves rounded up.
fn pct(num: u64, den: u64) -> Value {
    if den == 0 {
        return Value::Null;
    }
    let scaled = num * 1000;
    let mut tenths = scaled / den;
    if 2 * (scaled % den) >= den {
        tenths += 1;
    }
    json!(tenths as f64 / 10.0)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Every widget has at most seven categories, so all shares are whole
/// multiples of 1/420.
const UNIT: u64 = 420;

fn fraction(units: u64) -> String {
    let g = gcd(units, UNIT).max(1);
    let (n, d) = (units / g, UNIT / g);
    if units == 0 {
        "0".into()
    } else if d == 1 {
        n.to_string()
    } else {
        format!("{n}/{d}")
    }
}

fn distribution(widgets: &[&str], categories: &BTreeMap<String, Vec<String>>) -> Value {
    let labels: Vec<&str> = std::iter::once(NO_CATEGORY).chain(CATEGORIES).collect();
    let mut units = vec![0u64; labels.len()];
    for w in widgets {
        match categories.get(*w).filter(|c| !c.is_empty()) {
            Some(cats) => {
                for c in cats {
                    let i = labels.iter().position(|l| l == c).expect("known category");
                    units[i] += UNIT / cats.len() as u64;
                }
            }
            None => units[0] += UNIT,
        }
    }
    let total: u64 = units.iter().sum();
    let mut tenths = vec![0u64; labels.len()];
    if total > 0 {
        let mut rema: Vec<(u64, usize)> = Vec::new();
        for (i, u) in units.iter().enumerate() {
            tenths[i] = (u * 1000).div_euclid(total);
            rema.push(((u * 1000).rem_euclid(total), i));
        }
        let missing = 1000 - tenths.iter().sum::<u64>();
        rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in rema.iter().take(missing as usize) {
            tenths[i] += 1;
        }
    }
    let rows: Vec<Value> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "category": l,
                "weight": fraction(units[i]),
                "pct": if widgets.is_empty() { Value::Null } else { json!(tenths[i] as f64 / 10.0) },
            })
        })
        .collect();
    json!({ "adds": widgets.len(), "categories": rows })
}

/// The usage report as JSON, field for field.
pub fn reference_report(input: &UsageInput<'_>) -> Value {
    let lines: Vec<&str> = input.log.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let parsed: Vec<Entry> = lines.iter().filter_map(|l| parse_line(l)).collect();

    let bots: Vec<String> = config_lines(input.bots).map(str::to_lowercase).collect();
    let partner_nets: Vec<Net> = config_lines(input.partners).map(Net::parse).collect();
    let (mut removed_bots, mut removed_partners, mut removed_static) = (0u64, 0u64, 0u64);
    let mut api: Vec<&Entry> = Vec::new();
    for e in &parsed {
        let agent = e.agent.to_lowercase();
        if bots.iter().any(|b| agent.contains(b.as_str())) {
            removed_bots += 1;
        } else if partner_nets.iter().any(|n| n.covers(&e.ip)) {
            removed_partners += 1;
        } else if !(path(&e.resource) == "/api" || path(&e.resource).starts_with("/api/")) {
            removed_static += 1;
        } else {
            api.push(e);
        }
    }
    let ops: Vec<Op> = api.iter().filter_map(|e| operation(e)).collect();
    let unclassified = (api.len() - ops.len()) as u64;

    // daily series
    let mut per_day: BTreeMap<NaiveDate, (u64, u64)> = BTreeMap::new();
    for e in &api {
        let d = per_day.entry(e.ts.date_naive()).or_insert((0, 0));
        d.0 += 1;
        d.1 += e.bytes;
    }
    let (mut run_r, mut run_b) = (0u64, 0u64);
    let daily: Vec<Value> = per_day
        .iter()
        .map(|(day, &(r, b))| {
            run_r += r;
            run_b += b;
            json!({
                "date": day.format("%Y-%m-%d").to_string(),
                "requests": r,
                "kilo_requests": r as f64 / 1000.0,
                "cumulative_requests": run_r,
                "bytes": b,
                "cumulative_bytes": run_b,
            })
        })
        .collect();

    // geo
    let geo_rows: Vec<(Net, String, String)> = config_lines(input.geo)
        .filter(|l| !l.starts_with("prefix,"))
        .map(|l| {
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            assert_eq!(cols.len(), 3, "geo row {l}");
            (Net::parse(cols[0]), cols[1].to_string(), cols[2].to_string())
        })
        .collect();
    let locate = |ip: &str| -> (String, String) {
        let mut best: Option<&(Net, String, String)> = None;
        for row in &geo_rows {
            if row.0.covers(ip) && best.is_none_or(|b| row.0.prefix > b.0.prefix) {
                best = Some(row);
            }
        }
        best.map_or(("unknown".into(), "unknown".into()), |r| (r.1.clone(), r.2.clone()))
    };
    let mut by_place: BTreeMap<(String, String), (u64, BTreeSet<&str>)> = BTreeMap::new();
    for e in &api {
        let (city, country) = locate(&e.ip);
        let row = by_place.entry((country, city)).or_default();
        row.0 += 1;
        row.1.insert(&e.ip);
    }
    let mut geo: Vec<(&(String, String), u64, usize)> =
        by_place.iter().map(|(k, (r, ips))| (k, *r, ips.len())).collect();
    geo.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let known: Vec<&(String, String)> =
        geo.iter().map(|g| g.0).filter(|(country, city)| !(country == "unknown" && city == "unknown")).collect();
    let countries: BTreeSet<&str> = known.iter().map(|k| k.0.as_str()).collect();
    let geo_json: Vec<Value> = geo
        .iter()
        .map(|((country, city), r, ips)| json!({ "city": city, "country": country, "requests": r, "ips": ips }))
        .collect();
    let distinct_ips: BTreeSet<&str> = api.iter().map(|e| e.ip.as_str()).collect();

    // spaces
    struct Acc {
        created: bool,
        loads: u64,
        days: BTreeSet<NaiveDate>,
        srl_add: bool,
        srl_load: bool,
        first: NaiveDate,
        last: NaiveDate,
    }
    let mut spaces: BTreeMap<&str, Acc> = BTreeMap::new();
    for o in &ops {
        let a = spaces.entry(&o.space).or_insert(Acc {
            created: false,
            loads: 0,
            days: BTreeSet::new(),
            srl_add: false,
            srl_load: false,
            first: o.day,
            last: o.day,
        });
        a.first = a.first.min(o.day);
        a.last = a.last.max(o.day);
        let srl = o.widget.as_ref().is_some_and(|w| input.srl_widgets.contains(w));
        match o.kind {
            "space.create" => a.created = true,
            "space.load" => {
                a.loads += 1;
                a.days.insert(o.day);
            }
            "widget.add" if srl => a.srl_add = true,
            "widget.load" if srl => a.srl_load = true,
            _ => {}
        }
    }
    let mut labels = Vec::new();
    let (mut created, mut active, mut srl_enabled, mut srl_active, mut lifetime) = (0u64, 0u64, 0u64, 0u64, 0i64);
    let mut srl_spaces: BTreeSet<&str> = BTreeSet::new();
    for (name, a) in &spaces {
        let is_active = a.loads >= input.min_loads && a.days.len() as u64 >= input.min_days;
        let is_srl = a.srl_add && a.srl_load;
        let life = (a.last - a.first).num_days();
        created += a.created as u64;
        active += is_active as u64;
        if is_srl {
            srl_enabled += 1;
            srl_active += is_active as u64;
            lifetime += life;
            srl_spaces.insert(name);
        }
        labels.push(json!({
            "space": name,
            "created": a.created,
            "loads": a.loads,
            "load_days": a.days.len(),
            "active": is_active,
            "srl_enabled": is_srl,
            "lifetime_days": life,
        }));
    }
    let total = spaces.len() as u64;
    // lifetime / srl_enabled, half-up to tenths
    let scaled = lifetime as u64 * 10;
    let mean_life = match scaled.checked_div(srl_enabled) {
        None => Value::Null,
        Some(mut tenths) => {
            if 2 * (scaled % srl_enabled) >= srl_enabled {
                tenths += 1;
            }
            json!(tenths as f64 / 10.0)
        }
    };

    // users
    let actors: BTreeSet<&str> = ops.iter().map(|o| o.actor.as_str()).collect();
    let cohort = |kind: &str| {
        let n = ops.iter().filter(|o| o.kind == kind).map(|o| o.actor.as_str()).collect::<BTreeSet<_>>().len() as u64;
        json!({ "count": n, "pct": pct(n, actors.len() as u64) })
    };

    // categories
    let adds: Vec<(&str, bool)> = ops
        .iter()
        .filter(|o| o.kind == "widget.add")
        .map(|o| (o.widget.as_deref().expect("adds name a widget"), srl_spaces.contains(o.space.as_str())))
        .collect();
    let pick = |f: &dyn Fn(bool) -> bool| -> Vec<&str> { adds.iter().filter(|a| f(a.1)).map(|a| a.0).collect() };

    let mut operations = Map::new();
    for k in OPS {
        operations.insert(k.into(), json!(ops.iter().filter(|o| o.kind == k).count()));
    }
    operations.insert("unclassified".into(), json!(unclassified));

    json!({
        "schema": "ple-usage-report/1",
        "active_rule": { "min_loads": input.min_loads, "min_days": input.min_days },
        "totals": {
            "lines": lines.len(),
            "malformed": lines.len() - parsed.len(),
            "parsed": parsed.len(),
            "removed_bots": removed_bots,
            "removed_partners": removed_partners,
            "removed_static": removed_static,
            "api_requests": api.len(),
            "distinct_ips": distinct_ips.len(),
            "cities": known.len(),
            "countries": countries.len(),
            "classified": ops.len(),
            "unclassified": unclassified,
        },
        "daily": daily,
        "geo": geo_json,
        "spaces": {
            "total": total,
            "created": created,
            "active": active,
            "active_pct": pct(active, total),
            "srl_enabled": srl_enabled,
            "srl_enabled_pct": pct(srl_enabled, total),
            "srl_active": srl_active,
            "srl_active_pct": pct(srl_active, srl_enabled),
            "mean_srl_lifetime_days": mean_life,
        },
        "space_labels": labels,
        "users": {
            "active_users": actors.len(),
            "creators": cohort("space.create"),
            "joiners": cohort("space.join"),
            "widget_adders": cohort("widget.add"),
            "reopeners": cohort("space.load"),
        },
        "categories": {
            "srl": distribution(&pick(&|s| s), input.categories),
            "non_srl": distribution(&pick(&|s| !s), input.categories),
            "all": distribution(&pick(&|_| true), input.categories),
        },
        "operations": operations,
    })
}

/// JSON paths where `got` and `want` differ.
pub fn diff(got: &Value, want: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk("", got, want, &mut out);
    out
}

fn walk(at: &str, got: &Value, want: &Value, out: &mut Vec<String>) {
    match (got, want) {
        (Value::Object(a), Value::Object(b)) => {
            let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            for k in keys {
                walk(&format!("{at}.{k}"), a.get(k).unwrap_or(&Value::Null), b.get(k).unwrap_or(&Value::Null), out);
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                walk(&format!("{at}[{i}]"), x, y, out);
            }
        }
        _ if got != want => out.push(format!("{at}: got {got}, want {want}")),
        _ => {}
    }
}
