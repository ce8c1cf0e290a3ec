// Ranks widgets for a template entity against a learner's SRL goals, accepts
// the top one into a space and lints the resulting mashup.

use std::sync::Arc;

use ple_core::{Catalog, Competence, CompetenceKind, EntityRef, EqfLevel, EventLog, Platform, SystemClock};

pub fn main() {
    let platform = Platform::with_log(
        Arc::new(Catalog::default_catalog()),
        Arc::new(EventLog::in_memory(Arc::new(SystemClock))),
    )
    .unwrap();
    platform.learners.register("eva");
    let goal = Competence::Srl { strategy: "self_monitoring".into(), level: EqfLevel::new(3).unwrap() };
    platform.learners.set_competence("eva", goal, CompetenceKind::Goal).unwrap();

    let entity: EntityRef = "phase:reflect".parse().unwrap();
    let ranked = platform.recommend_widgets(&entity, "eva").unwrap();
    println!("widgets for {entity}:");
    for r in &ranked {
        println!("  {:<22} score {} added {:>3}  {}", r.item_id, r.score, r.add_count, r.reasons.join("; "));
    }

    platform.spaces.create_space("reflection", "eva").unwrap();
    let top = &ranked[0].item_id;
    let instance = platform.accept_widget_recommendation("reflection", "Start", top, "eva").unwrap();
    println!("\nadded {} as {}", instance.widget_id, instance.instance_id);

    println!("lint findings:");
    for finding in platform.lint_space("reflection", "eva").unwrap() {
        println!("  {}", serde_json::to_string(&finding).unwrap());
    }
}
