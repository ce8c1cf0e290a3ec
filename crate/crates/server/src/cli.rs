//! Command-line interface of the `ple` binary.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ple_analytics::output::{geo_csv, to_csv, to_json, OutputFormat};
use ple_analytics::{
    filters, read_log, run, ActiveRule, AnalyticsError, AnalyzeConfig, BotPatterns, GeoTable, PartnerSet,
    UsageReport,
};
use ple_core::recommend::{LintConfig, SchedulerConfig, DEFAULT_MAX_WIDGETS};
use ple_core::{Catalog, Platform, PlatformConfig};

#[derive(Debug, Parser)]
#[command(name = "ple", version, about = "Personal learning environment server and usage analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Produce a usage report from an access log or platform event log.
    Analyze(AnalyzeArgs),
    /// Run the HTTP and realtime server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Combined Log Format lines or JSON-Lines platform events.
    #[arg(long)]
    pub log: PathBuf,
    /// User-agent patterns of automated agents, one regex per line.
    #[arg(long)]
    pub bots: Option<PathBuf>,
    /// Partner addresses or CIDR networks, one per line.
    #[arg(long)]
    pub partners: Option<PathBuf>,
    /// Geo table as CSV with the columns prefix,city,country.
    #[arg(long)]
    pub geo: Option<PathBuf>,
    /// SRL widget ids, one per line; defaults to the catalog's SRL flags.
    #[arg(long)]
    pub srl_widgets: Option<PathBuf>,
    #[arg(long, default_value_t = ActiveRule::default().min_loads)]
    pub active_loads: u32,
    #[arg(long, default_value_t = ActiveRule::default().min_days)]
    pub active_days: u32,
    /// Catalog document used for widget categories.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Report file; `.csv` writes CSV, anything else JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write city and country counts as CSV.
    #[arg(long)]
    pub geo_out: Option<PathBuf>,
    /// Parse the log on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// JSON-Lines event log; state is rebuilt from it on start.
    #[arg(long)]
    pub event_log: Option<PathBuf>,
    /// Learning-object index for content recommendations.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Event-to-strategy table for the monitor.
    #[arg(long)]
    pub monitor_defaults: Option<PathBuf>,
    /// File keeping manual technique assignments.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
    /// Append a Combined Log Format line per request to this file.
    #[arg(long)]
    pub access_log: Option<PathBuf>,
    #[arg(long, default_value_t = SchedulerConfig::default().skip_cooldown)]
    pub skip_cooldown: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_WIDGETS)]
    pub max_widgets: usize,
}

pub fn analyze_config(args: &AnalyzeArgs) -> Result<AnalyzeConfig, AnalyticsError> {
    let catalog = match &args.catalog {
        Some(p) => Catalog::load(p)?,
        None => Catalog::default_catalog(),
    };
    let mut config = AnalyzeConfig::with_catalog(catalog);
    if let Some(p) = &args.bots {
        config.bots = BotPatterns::load(p)?;
    }
    if let Some(p) = &args.partners {
        config.partners = PartnerSet::load(p)?;
    }
    if let Some(p) = &args.geo {
        config.geo = GeoTable::load(p)?;
    }
    if let Some(p) = &args.srl_widgets {
        config.srl_widgets = filters::load_widget_list(p)?;
    }
    config.rule = ActiveRule {
        min_loads: args.active_loads,
        min_days: args.active_days,
    };
    config.parallel = args.parallel;
    Ok(config)
}

fn write(path: &Path, text: &str) -> Result<(), AnalyticsError> {
    std::fs::write(path, text).map_err(|source| AnalyticsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the pipeline and writes the requested outputs.
pub fn analyze(args: &AnalyzeArgs) -> Result<UsageReport, AnalyticsError> {
    let config = analyze_config(args)?;
    let report = run(&config, &read_log(&args.log)?);
    let text = match OutputFormat::for_path(&args.out) {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => to_csv(&report),
    };
    write(&args.out, &text)?;
    if let Some(p) = &args.geo_out {
        write(p, &geo_csv(&report.geo))?;
    }
    Ok(report)
}

pub fn platform_config(args: &ServeArgs) -> PlatformConfig {
    PlatformConfig {
        catalog: args.catalog.clone(),
        event_log: args.event_log.clone(),
        corpus: args.corpus.clone(),
        monitor_defaults: args.monitor_defaults.clone(),
        scheduler: SchedulerConfig {
            skip_cooldown: args.skip_cooldown,
        },
        lint: LintConfig {
            max_widgets: args.max_widgets,
        },
    }
}

pub fn open_platform(args: &ServeArgs) -> Result<Platform, ple_core::PlatformError> {
    Platform::open(&platform_config(args))
}
