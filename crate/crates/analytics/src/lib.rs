//! Usage analytics over platform access logs.
//!
//! The pipeline runs `parse → clean → extract → classify → aggregate` and
//! yields a [`UsageReport`]: request totals and daily series, geographic
//! spread, active and SRL-enabled spaces, user cohorts and the category mix
//! of widgets added to SRL versus other spaces.
//!
//! ```
//! use ple_analytics::{run, AnalyzeConfig};
//!
//! let log = r#"10.0.0.1 - - [02/May/2013:09:00:00 +0000] "POST /api/spaces?name=algebra HTTP/1.1" 201 0 "-" "Mozilla""#;
//! let report = run(&AnalyzeConfig::default(), log);
//! assert_eq!(report.spaces.created, 1);
//! assert_eq!(report.users.creators.pct, Some(100.0));
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ple_core::Catalog;
use thiserror::Error;

pub mod filters;
pub mod ops;
pub mod output;
pub mod parse;
pub mod report;
pub mod synth;

pub use filters::{BotPatterns, ConfigError, GeoTable, PartnerSet};
pub use ops::{OpKind, Operation};
pub use parse::AccessLogEntry;
pub use report::{ActiveRule, UsageReport};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("catalog: {0}")]
    Catalog(#[from] ple_core::CatalogError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug)]
pub struct AnalyzeConfig {
    pub bots: BotPatterns,
    pub partners: PartnerSet,
    pub geo: GeoTable,
    pub srl_widgets: BTreeSet<String>,
    pub rule: ActiveRule,
    pub catalog: Catalog,
    pub parallel: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig::with_catalog(Catalog::default_catalog())
    }
}

impl AnalyzeConfig {
    /// Empty filters and the catalog's SRL-flagged widgets.
    pub fn with_catalog(catalog: Catalog) -> Self {
        AnalyzeConfig {
            bots: BotPatterns::default(),
            partners: PartnerSet::default(),
            geo: GeoTable::default(),
            srl_widgets: srl_widgets_of(&catalog),
            rule: ActiveRule::default(),
            catalog,
            parallel: false,
        }
    }
}

pub fn srl_widgets_of(catalog: &Catalog) -> BTreeSet<String> {
    catalog.widgets().into_iter().filter(|w| w.srl_flag).map(|w| w.id).collect()
}

pub fn read_log(path: impl AsRef<Path>) -> Result<String, AnalyticsError> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| AnalyticsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the whole pipeline over the text of one log.
pub fn run(config: &AnalyzeConfig, log: &str) -> UsageReport {
    let parsed = parse::parse_log(log, config.parallel);
    let parsed_count = parsed.entries.len() as u64;
    let (cleaned, cleaning) = ops::clean(parsed.entries, &config.bots, &config.partners);
    let (operations, unclassified) = ops::extract_operations(&cleaned);
    report::aggregate(
        report::Aggregation {
            lines: parsed.lines,
            malformed: parsed.malformed,
            parsed: parsed_count,
            cleaning,
            cleaned: &cleaned,
            ops: &operations,
            unclassified,
        },
        &report::Context {
            catalog: &config.catalog,
            geo: &config.geo,
            srl_widgets: &config.srl_widgets,
            rule: config.rule,
        },
    )
}
