// Generates a seeded synthetic access log with bots, partner traffic and
// static files mixed in, runs the full pipeline and prints the headline
// numbers plus the CSV summary.

use ple_analytics::synth::synthetic_world;
use ple_analytics::{output, run, AnalyzeConfig, BotPatterns, GeoTable, PartnerSet};

pub fn main() {
    let world = synthetic_world(2013, 5_000);
    let config = AnalyzeConfig {
        bots: BotPatterns::parse(world.bots).unwrap(),
        partners: PartnerSet::parse(world.partners).unwrap(),
        geo: GeoTable::parse(world.geo).unwrap(),
        ..AnalyzeConfig::default()
    };
    let report = run(&config, &world.log);

    let t = &report.totals;
    println!(
        "{} lines: {} bot, {} partner, {} static removed; {} API requests from {} addresses in {} cities",
        t.lines, t.removed_bots, t.removed_partners, t.removed_static, t.api_requests, t.distinct_ips, t.cities
    );
    let s = &report.spaces;
    println!(
        "{} spaces, {} active ({}%), {} SRL-enabled, mean SRL lifetime {} days",
        s.total,
        s.active,
        s.active_pct.unwrap_or_default(),
        s.srl_enabled,
        s.mean_srl_lifetime_days.unwrap_or_default()
    );
    for (op, n) in &report.operations {
        println!("  {op:<14} {n}");
    }
    println!("\n{}", output::to_csv(&report));
    println!("{}", output::geo_csv(&report.geo[..report.geo.len().min(5)]));
}
