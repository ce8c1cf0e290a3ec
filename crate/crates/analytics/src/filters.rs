//! Cleaning and enrichment inputs: bot patterns, partner networks, the
//! offline geo table and the SRL widget list.

use std::collections::BTreeSet;
use std::net::IpAddr;
use std::path::Path;

use ipnet::IpNet;
use regex::{Regex, RegexBuilder};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// User-agent patterns of automated agents, matched case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct BotPatterns {
    patterns: Vec<Regex>,
}

impl BotPatterns {
    /// One regular expression per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let patterns = content_lines(text)
            .map(|(line, p)| {
                RegexBuilder::new(p)
                    .case_insensitive(true)
                    .build()
                    .map_err(|e| ConfigError::Parse {
                        file: "bots".into(),
                        line,
                        message: e.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(BotPatterns { patterns })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn is_bot(&self, user_agent: &str) -> bool {
        self.patterns.iter().any(|p| p.is_match(user_agent))
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// An address or CIDR network. A bare address is a /32 or /128.
fn parse_network(s: &str) -> Result<IpNet, String> {
    let s = s.trim();
    match s.parse::<IpAddr>() {
        Ok(addr) => Ok(IpNet::from(addr)),
        Err(_) => s.parse().map_err(|_| format!("bad network `{s}`")),
    }
}

/// Addresses of partner institutions whose traffic is excluded.
#[derive(Debug, Clone, Default)]
pub struct PartnerSet {
    networks: Vec<IpNet>,
    /// Non-address actors (learner ids in event logs).
    names: BTreeSet<String>,
}

impl PartnerSet {
    /// One address, CIDR network or (for event logs) learner id per line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut set = PartnerSet::default();
        for (line, entry) in content_lines(text) {
            let looks_like_address =
                entry.contains('/') || entry.parse::<IpAddr>().is_ok() || entry.contains(':');
            if looks_like_address {
                let net = parse_network(entry).map_err(|message| ConfigError::Parse {
                    file: "partners".into(),
                    line,
                    message,
                })?;
                set.networks.push(net);
            } else {
                set.names.insert(entry.to_string());
            }
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn contains(&self, actor: &str) -> bool {
        match actor.parse::<IpAddr>() {
            Ok(ip) => self.networks.iter().any(|n| n.contains(&ip)),
            Err(_) => self.names.contains(actor),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty() && self.names.is_empty()
    }
}

pub const UNKNOWN: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Location {
    pub city: String,
    pub country: String,
}

impl Location {
    pub fn unknown() -> Self {
        Location {
            city: UNKNOWN.into(),
            country: UNKNOWN.into(),
        }
    }

    pub fn is_unknown(&self) -> bool {
        self.city == UNKNOWN && self.country == UNKNOWN
    }
}

/// Offline prefix table resolved by longest-prefix match.
#[derive(Debug, Clone, Default)]
pub struct GeoTable {
    rows: Vec<(IpNet, Location)>,
}

impl GeoTable {
    /// CSV with a header row and the columns `prefix,city,country`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let err = |message: String| ConfigError::Parse {
                file: "geo".into(),
                line: i + 2,
                message,
            };
            let record = record.map_err(|e| err(e.to_string()))?;
            if record.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", record.len())));
            }
            let net = parse_network(&record[0]).map_err(err)?;
            rows.push((
                net,
                Location {
                    city: record[1].to_string(),
                    country: record[2].to_string(),
                },
            ));
        }
        Ok(GeoTable { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&read(path.as_ref())?)
    }

    /// Longest matching prefix; the earliest row wins among equal lengths.
    pub fn locate(&self, actor: &str) -> Location {
        let Ok(ip) = actor.parse::<IpAddr>() else {
            return Location::unknown();
        };
        let mut best: Option<&(IpNet, Location)> = None;
        for row in &self.rows {
            if row.0.contains(&ip) && best.is_none_or(|b| row.0.prefix_len() > b.0.prefix_len()) {
                best = Some(row);
            }
        }
        best.map_or_else(Location::unknown, |(_, l)| l.clone())
    }
}

/// Widget ids, one per line.
pub fn parse_widget_list(text: &str) -> BTreeSet<String> {
    content_lines(text).map(|(_, l)| l.to_string()).collect()
}

pub fn load_widget_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>, ConfigError> {
    Ok(parse_widget_list(&read(path.as_ref())?))
}
