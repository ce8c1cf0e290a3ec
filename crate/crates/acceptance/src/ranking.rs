//! Brute-force widget ranking and random recommender instances.

use std::collections::BTreeSet;

use ple_core::catalog::{CatalogDocument, WidgetDoc};
use ple_core::{Catalog, Competence, CompetenceKind, EntityRef, EqfLevel, LearnerRecord};
use rand::seq::IndexedRandom;
use rand::Rng;

/// One randomized recommender problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub doc: CatalogDocument,
    /// Strategy ids the learner has SRL goals for, repeats allowed.
    pub goals: Vec<String>,
    pub entity: EntityRef,
}

impl Instance {
    pub fn catalog(&self) -> Catalog {
        Catalog::from_document(self.doc.clone()).expect("generated catalog is valid")
    }

    pub fn learner(&self) -> LearnerRecord {
        let mut l = LearnerRecord::new("learner");
        for (i, g) in self.goals.iter().enumerate() {
            let level = EqfLevel::new(1 + (i % 8) as u8).expect("level in range");
            l.upsert(Competence::Srl { strategy: g.clone(), level }, CompetenceKind::Goal);
        }
        l
    }
}

/// A catalog with up to `max_widgets` widgets on random techniques of the
/// default ontology, a learner with up to `max_goals` goals and a random
/// template entity.
pub fn random_instance(rng: &mut impl Rng, max_widgets: usize, max_goals: usize) -> Instance {
    let mut doc = Catalog::default_catalog().to_document();
    let techniques: Vec<String> = doc.techniques.iter().map(|t| t.id.clone()).collect();
    let strategies: Vec<String> = doc.strategies.iter().map(|s| s.id.clone()).collect();
    let n = rng.random_range(0..=max_widgets);
    doc.widgets = (0..n)
        .map(|i| {
            let k = rng.random_range(0..=4);
            WidgetDoc {
                id: format!("w{:02}-{}", rng.random_range(0..100), i),
                title: format!("Widget {i}"),
                description: String::new(),
                launch_url: format!("/widgets/{i}/"),
                techniques: (0..k).map(|_| techniques.choose(rng).expect("techniques").clone()).collect::<BTreeSet<_>>().into_iter().collect(),
                categories: Vec::new(),
                srl: rng.random_bool(0.5),
                add_count: rng.random_range(0..3),
            }
        })
        .collect();
    doc.bundles.clear();
    doc.templates.clear();
    let goals = (0..rng.random_range(0..=max_goals))
        .map(|_| strategies.choose(rng).expect("strategies").clone())
        .collect();
    let entity = match rng.random_range(0..3) {
        0 => EntityRef::Phase(*ple_core::Phase::ALL.choose(rng).expect("phases")),
        1 => EntityRef::Strategy(strategies.choose(rng).expect("strategies").clone()),
        _ => EntityRef::Technique(techniques.choose(rng).expect("techniques").clone()),
    };
    Instance { doc, goals, entity }
}

/// `(widget, score, add_count)` in recommendation order, computed from the
/// catalog document alone.
pub fn brute_force_ranking(inst: &Instance) -> Vec<(String, u32, u64)> {
    let doc = &inst.doc;
    let strategy_phase = |s: &str| doc.strategies.iter().find(|x| x.id == s).map(|x| x.phase.clone());
    let under: BTreeSet<&str> = doc
        .techniques
        .iter()
        .filter(|t| match &inst.entity {
            EntityRef::Technique(id) => &t.id == id,
            EntityRef::Strategy(id) => &t.strategy == id,
            EntityRef::Phase(p) => strategy_phase(&t.strategy).as_deref() == Some(p.as_str()),
        })
        .map(|t| t.id.as_str())
        .collect();
    let goal_strategies: BTreeSet<&str> = inst.goals.iter().map(String::as_str).collect();
    let mut rows: Vec<(String, u32, u64)> = Vec::new();
    for w in &doc.widgets {
        if !w.techniques.iter().any(|t| under.contains(t.as_str())) {
            continue;
        }
        let mut score = 1;
        for g in &goal_strategies {
            let hit = w
                .techniques
                .iter()
                .any(|t| doc.techniques.iter().any(|d| &d.id == t && d.strategy == *g));
            if hit {
                score += 1;
            }
        }
        rows.push((w.id.clone(), score, w.add_count));
    }
    // selection sort on (score desc, add_count desc, id asc)
    let mut sorted = Vec::with_capacity(rows.len());
    while !rows.is_empty() {
        let mut best = 0;
        for i in 1..rows.len() {
            let (a, b) = (&rows[i], &rows[best]);
            let better = a.1 > b.1 || (a.1 == b.1 && (a.2 > b.2 || (a.2 == b.2 && a.0 < b.0)));
            if better {
                best = i;
            }
        }
        sorted.push(rows.remove(best));
    }
    sorted
}
