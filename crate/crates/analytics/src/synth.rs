//! Seeded generators for synthetic access logs and the bundled
//! category-distribution fixture.

use chrono::{DateTime, Duration, FixedOffset, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parse::AccessLogEntry;

pub const BOTS: &str = include_str!("../data/bots.txt");
pub const PARTNERS: &str = include_str!("../data/partners.txt");
pub const GEO: &str = include_str!("../data/geo.csv");

/// Address prefixes of synthetic learners. The last one is absent from
/// [`GEO`].
const HUMAN_PREFIXES: [&str; 7] = ["141.20", "141.20.5", "193.170", "129.16", "147.251", "2001:db8:2", "203.0.113"];
const HUMAN_AGENTS: [&str; 3] = [
    "Mozilla/5.0 (Windows NT 6.1; rv:19.0) Gecko/20100101 Firefox/19.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_8_2) AppleWebKit/536.26 Safari/536.26",
    "Opera/9.80 (X11; Linux x86_64) Presto/2.12.388 Version/12.14",
];
const BOT_AGENTS: [&str; 4] = [
    "Mozilla/5.0 (compatible; Googlebot/2.1)",
    "Baiduspider+(+http://www.baidu.com/search/spider.htm)",
    "msnbot/2.0b",
    "UptimeRobot/2.0",
];

/// A generated log together with the filter files it was built against.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub log: String,
    pub bots: &'static str,
    pub partners: &'static str,
    pub geo: &'static str,
}

struct Gen {
    rng: ChaCha8Rng,
    now: DateTime<Utc>,
    users: Vec<String>,
    spaces: Vec<String>,
    instances: Vec<(String, String, String)>,
    widgets: Vec<String>,
    next_instance: u64,
}

impl Gen {
    fn ip(&mut self, prefix: &str) -> String {
        let dots = prefix.matches('.').count();
        if prefix.contains(':') {
            format!("{prefix}::{:x}", self.rng.random_range(1..0xffffu32))
        } else {
            let rest: Vec<String> = (dots..3).map(|_| self.rng.random_range(1..255u8).to_string()).collect();
            format!("{prefix}.{}", rest.join("."))
        }
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.random_range(0..items.len())]
    }

    fn line(&mut self, ip: String, method: &str, resource: String, status: u16, agent: &str) -> String {
        let offset = *self.pick(&[0, 2 * 3600, -5 * 3600]);
        let ts = self.now.with_timezone(&FixedOffset::east_opt(offset).expect("valid offset"));
        let bytes = self.rng.random_range(0..20_000u64);
        format!(
            "{ip} - - [{}] \"{method} {resource} HTTP/1.1\" {status} {bytes} \"-\" \"{agent}\"",
            ts.format("%d/%b/%Y:%H:%M:%S %z")
        )
    }

    fn static_resource(&mut self) -> String {
        match self.rng.random_range(0..3) {
            0 => "/favicon.ico".into(),
            1 => format!("/static/js/app.{}.js", self.rng.random_range(0..4)),
            _ => {
                let w = self.pick(&self.widgets.clone()).clone();
                format!("/widgets/{w}/index.html")
            }
        }
    }

    fn human_op(&mut self) -> (&'static str, String) {
        let roll = self.rng.random_range(0..100);
        if self.spaces.is_empty() || roll < 8 {
            let name = format!("space-{:03}", self.spaces.len());
            self.spaces.push(name.clone());
            return ("POST", format!("/api/spaces?name={name}"));
        }
        let space = self.pick(&self.spaces.clone()).clone();
        let in_space: Vec<(String, String)> = self
            .instances
            .iter()
            .filter(|(s, _, _)| *s == space)
            .map(|(_, i, w)| (i.clone(), w.clone()))
            .collect();
        match roll {
            8..16 => ("POST", format!("/api/spaces/{space}/members")),
            16..18 => {
                let who = self.pick(&self.users.clone()).clone();
                ("DELETE", format!("/api/spaces/{space}/members/{who}"))
            }
            18..53 => ("GET", format!("/api/spaces/{space}")),
            53..73 => {
                let w = self.pick(&self.widgets.clone()).clone();
                self.next_instance += 1;
                self.instances.push((space.clone(), format!("i{}", self.next_instance), w.clone()));
                ("POST", format!("/api/spaces/{space}/widgets?widget={w}"))
            }
            _ if in_space.is_empty() => ("GET", format!("/api/spaces/{space}")),
            73..78 => {
                let (i, w) = self.pick(&in_space).clone();
                ("DELETE", format!("/api/spaces/{space}/widgets/{i}?widget={w}"))
            }
            _ => {
                let (i, w) = self.pick(&in_space).clone();
                ("GET", format!("/api/spaces/{space}/widgets/{i}/load?widget={w}"))
            }
        }
    }
}

/// `lines` log lines spread over roughly a week: learners operating on
/// spaces, crawlers, partner traffic, static assets, failed and unmapped API
/// calls and a few malformed lines.
pub fn synthetic_world(seed: u64, lines: usize) -> SyntheticWorld {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        now: Utc.with_ymd_and_hms(2012, 10, 1, 6, 0, 0).unwrap(),
        users: Vec::new(),
        spaces: Vec::new(),
        instances: Vec::new(),
        widgets: ple_core::Catalog::default_catalog().widgets().into_iter().map(|w| w.id).collect(),
        next_instance: 0,
    };
    for _ in 0..150 {
        let prefix = *g.pick(&HUMAN_PREFIXES);
        let ip = g.ip(prefix);
        g.users.push(ip);
    }
    let mut out = String::new();
    for i in 0..lines {
        g.now += Duration::seconds(g.rng.random_range(0..=110));
        let roll = g.rng.random_range(0..100);
        let line = match roll {
            0..6 => {
                let prefix = *g.pick(&HUMAN_PREFIXES);
                let ip = g.ip(prefix);
                let agent = *g.pick(&BOT_AGENTS);
                let (m, r) = if g.rng.random_bool(0.5) { g.human_op() } else { ("GET", g.static_resource()) };
                g.line(ip, m, r, 200, agent)
            }
            6..10 => {
                let ip = if g.rng.random_bool(0.8) { g.ip("137.226") } else { g.ip("2001:db8:1") };
                let agent = *g.pick(&HUMAN_AGENTS);
                let (m, r) = g.human_op();
                g.line(ip, m, r, 200, agent)
            }
            10..28 => {
                let ip = g.pick(&g.users.clone()).clone();
                let agent = *g.pick(&HUMAN_AGENTS);
                let r = g.static_resource();
                g.line(ip, "GET", r, 200, agent)
            }
            28..30 => match g.rng.random_range(0..3) {
                0 => format!("corrupted entry {i}"),
                1 => {
                    let ip = g.pick(&g.users.clone()).clone();
                    format!("{ip} - - [01/Oct/2012:06:00:00 +0000] \"GET /api/spaces HTTP/1.1\" 999 0")
                }
                _ => {
                    let ip = g.pick(&g.users.clone()).clone();
                    format!("{ip} - - [yesterday] \"GET /api/spaces HTTP/1.1\" 200 0")
                }
            },
            30..34 => {
                let ip = g.pick(&g.users.clone()).clone();
                let agent = *g.pick(&HUMAN_AGENTS);
                let (m, r, s) = *g.pick(&[
                    ("GET", "/api/catalog/widgets", 200),
                    ("GET", "/api/learners/eva/feed", 200),
                    ("POST", "/api/spaces", 201),
                    ("GET", "/api/spaces/ghost", 404),
                    ("POST", "/api/spaces/ghost/widgets", 400),
                ]);
                g.line(ip, m, r.into(), s, agent)
            }
            _ => {
                let ip = g.pick(&g.users.clone()).clone();
                let agent = *g.pick(&HUMAN_AGENTS);
                let (m, r) = g.human_op();
                let status = if m == "POST" { 201 } else { 200 };
                g.line(ip, m, r, status, agent)
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    SyntheticWorld {
        log: out,
        bots: BOTS,
        partners: PARTNERS,
        geo: GEO,
    }
}

pub const FIXTURE_SPACES_PER_COHORT: usize = 50;

/// Widget additions per cohort. Every widget carries at most one category.
pub const FIXTURE_SRL_ADDS: [(&str, usize); 15] = [
    ("self-reflection", 50),
    ("activity-recommender", 538),
    ("to-learn-list", 65),
    ("time-planner", 65),
    ("self-evaluation", 12),
    ("srl-monitor", 12),
    ("share-your-experience", 12),
    ("learning-diary", 11),
    ("multi-user-chat", 80),
    ("note-pad", 60),
    ("vocabulary-trainer", 40),
    ("text-reader", 18),
    ("function-plotter", 17),
    ("modified-binocs", 10),
    ("foreign-media-search", 10),
];

pub const FIXTURE_OTHER_ADDS: [(&str, usize); 12] = [
    ("media-player", 648),
    ("to-learn-list", 44),
    ("time-planner", 43),
    ("learning-diary", 13),
    ("share-your-experience", 13),
    ("multi-user-chat", 110),
    ("note-pad", 50),
    ("vocabulary-trainer", 35),
    ("text-reader", 14),
    ("function-plotter", 14),
    ("modified-binocs", 8),
    ("foreign-media-search", 8),
];

fn expand(table: &[(&str, usize)]) -> Vec<String> {
    table
        .iter()
        .flat_map(|&(w, n)| std::iter::repeat_n(w.to_string(), n))
        .collect()
}

/// A log of 100 spaces with 1000 widget additions each to SRL-enabled and
/// other spaces. Each SRL-enabled space adds and then loads one
/// self-reflection widget; the other spaces never load an SRL widget.
pub fn category_fixture() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mut entries: Vec<AccessLogEntry> = Vec::new();
    let mut now = Utc.with_ymd_and_hms(2013, 3, 1, 8, 0, 0).unwrap();
    let mut push = |ip: &str, method: &str, resource: String| {
        now += Duration::minutes(1);
        entries.push(AccessLogEntry {
            ip: ip.into(),
            ts: now,
            method: method.into(),
            resource,
            status: if method == "POST" { 201 } else { 200 },
            bytes: 512,
            user_agent: HUMAN_AGENTS[0].into(),
        });
    };

    let mut srl = expand(&FIXTURE_SRL_ADDS);
    let first: Vec<String> = srl.drain(..FIXTURE_SPACES_PER_COHORT).collect();
    srl.shuffle(&mut rng);
    let mut other = expand(&FIXTURE_OTHER_ADDS);
    other.shuffle(&mut rng);
    let per_space = other.len() / FIXTURE_SPACES_PER_COHORT;

    for s in 0..FIXTURE_SPACES_PER_COHORT {
        let space = format!("srl-{s:02}");
        let ip = format!("141.20.{}.1", s + 1);
        push(&ip, "POST", format!("/api/spaces?name={space}"));
        let mut widgets = vec![first[s].clone()];
        widgets.extend(srl[s * (per_space - 1)..(s + 1) * (per_space - 1)].iter().cloned());
        for w in &widgets {
            push(&ip, "POST", format!("/api/spaces/{space}/widgets?widget={w}"));
        }
        push(&ip, "GET", format!("/api/spaces/{space}"));
        push(&ip, "GET", format!("/api/spaces/{space}/widgets/{space}-0/load?widget={}", first[s]));
    }
    for s in 0..FIXTURE_SPACES_PER_COHORT {
        let space = format!("std-{s:02}");
        let ip = format!("193.170.{}.1", s + 1);
        push(&ip, "POST", format!("/api/spaces?name={space}"));
        for w in &other[s * per_space..(s + 1) * per_space] {
            push(&ip, "POST", format!("/api/spaces/{space}/widgets?widget={w}"));
        }
        push(&ip, "GET", format!("/api/spaces/{space}"));
    }
    entries.iter().map(|e| e.to_clf() + "\n").collect()
}
