// Reproduces the published category mix of widgets added to SRL-enabled and
// other spaces from the bundled fixture log.

use ple_analytics::{read_log, run, AnalyzeConfig};

pub fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/category_fixture.log");
    let report = run(&AnalyzeConfig::default(), &read_log(path).unwrap());
    let c = &report.categories;
    println!("{:<30} {:>6} {:>8}", "category", "SRL", "non-SRL");
    for (srl, other) in c.srl.categories.iter().zip(&c.non_srl.categories) {
        let pct = |p: Option<f64>| p.map_or("-".to_string(), |v| format!("{v:.1}"));
        println!("{:<30} {:>6} {:>8}", srl.category, pct(srl.pct), pct(other.pct));
    }
    println!("additions: {} to SRL spaces, {} to others", c.srl.adds, c.non_srl.adds);
}
