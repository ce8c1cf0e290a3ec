// Drives the activity recommender the way the activity panel does: accept,
// skip, drill down into a strategy's techniques and accept one of them.

use std::sync::Arc;

use ple_core::{Catalog, EventLog, Outcome, Platform, SystemClock};

pub fn main() {
    let platform = Platform::with_log(
        Arc::new(Catalog::default_catalog()),
        Arc::new(EventLog::in_memory(Arc::new(SystemClock))),
    )
    .unwrap();
    platform.learners.register("max");

    for step in 0..12 {
        let rec = platform.next_activity("max").unwrap();
        let outcome = match step {
            3 | 4 => Outcome::Skipped,
            7 => Outcome::DrillDown,
            _ => Outcome::Accepted,
        };
        let result = platform.activity_outcome("max", &rec.item_id, outcome).unwrap();
        println!("{step:>2} {:<36} {:?}  ({})", rec.item_id, outcome, rec.reasons.join(", "));
        if let Some(techniques) = result.techniques {
            let pick = &techniques[0].item_id;
            println!("   techniques: {}", techniques.iter().map(|t| t.item_id.as_str()).collect::<Vec<_>>().join(" "));
            let applied = platform.activity_outcome("max", pick, Outcome::Accepted).unwrap().applied;
            println!("   applied {}", applied.unwrap_or_default());
        }
    }

    let state = platform.scheduler_state("max");
    println!("\naccepted per strategy:");
    for s in platform.catalog.strategies() {
        println!("  {:<24} {}", s.id, state.count(&s.id));
    }
    println!("applications recorded: {}", platform.learners.get("max").unwrap().applies.len());
}
