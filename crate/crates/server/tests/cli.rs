use std::fs;

use clap::Parser;
use ple_analytics::synth::synthetic_world;
use ple_server::cli::{analyze, Cli, Command};

#[test]
fn analyze_writes_json_csv_and_geo() {
    let dir = tempfile::tempdir().unwrap();
    let world = synthetic_world(7, 2_000);
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    fs::write(path("access.log"), &world.log).unwrap();
    fs::write(path("bots.txt"), world.bots).unwrap();
    fs::write(path("partners.txt"), world.partners).unwrap();
    fs::write(path("geo.csv"), world.geo).unwrap();

    let run = |out: &str, extra: &[&str]| {
        let mut argv = vec![
            "ple".to_string(),
            "analyze".into(),
            "--log".into(),
            path("access.log"),
            "--bots".into(),
            path("bots.txt"),
            "--partners".into(),
            path("partners.txt"),
            "--geo".into(),
            path("geo.csv"),
            "--out".into(),
            path(out),
        ];
        argv.extend(extra.iter().map(|s| s.to_string()));
        let Command::Analyze(args) = Cli::parse_from(argv).command else {
            panic!("expected analyze");
        };
        analyze(&args).unwrap()
    };

    let geo_out = path("geo_out.csv");
    let report = run("report.json", &["--geo-out", &geo_out]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(path("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "ple-usage-report/1");
    assert_eq!(json["totals"]["lines"], 2_000);
    assert_eq!(json["totals"]["removed_bots"], report.totals.removed_bots);
    let geo = fs::read_to_string(geo_out).unwrap();
    assert!(geo.starts_with("city,country,requests,ips\n"));
    assert_eq!(geo.lines().count(), report.geo.len() + 1);

    let stricter = run("report.csv", &["--active-loads", "50", "--parallel"]);
    assert!(stricter.spaces.active <= report.spaces.active);
    let csv = fs::read_to_string(path("report.csv")).unwrap();
    assert!(csv.starts_with("section,key,value\n"));
    assert!(csv.contains("active_rule,min_loads,50\n"), "{}", &csv[..300]);
}

#[test]
fn missing_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("a.log");
    fs::write(&log, "").unwrap();
    let cli = Cli::parse_from([
        "ple",
        "analyze",
        "--log",
        log.to_str().unwrap(),
        "--bots",
        "/definitely/not/here.txt",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    let Command::Analyze(args) = cli.command else { unreachable!() };
    let err = analyze(&args).unwrap_err();
    assert!(err.to_string().contains("/definitely/not/here.txt"), "{err}");
}
