// Searches a small learning-object index for material on a learner's
// domain goals. Tagged objects match on concept ids or labels, untagged ones
// on concept labels in the title.

use ple_core::recommend::{recommend_content, ContentCorpus, LearningObject};
use ple_core::{Catalog, Competence, CompetenceKind, EqfLevel, LearnerRecord};

fn object(id: &str, title: &str, tags: &[&str]) -> LearningObject {
    LearningObject {
        id: id.into(),
        title: title.into(),
        text: String::new(),
        tags: tags.iter().map(|t| t.to_string()).collect(),
    }
}

pub fn main() {
    let catalog = Catalog::default_catalog();
    let corpus = ContentCorpus::new(vec![
        object("lo-1", "The Franks after Rome", &["frankish_kingdom", "Merovingian dynasty"]),
        object("lo-2", "Clovis I and his baptism", &[]),
        object("lo-3", "Merovingian coinage", &["merovingian_dynasty"]),
        object("lo-4", "Completing the square", &["quadratic_equations"]),
    ]);

    let mut learner = LearnerRecord::new("eva");
    for concept in ["merovingian_dynasty", "frankish_kingdom", "clovis_i"] {
        let goal = Competence::Domain {
            concept: concept.into(),
            context: "history".into(),
            level: EqfLevel::new(4).unwrap(),
        };
        learner.upsert(goal, CompetenceKind::Goal);
    }

    for r in recommend_content(&catalog, &learner, Some(&corpus)).unwrap() {
        println!("{} score {}: {}", r.item_id, r.score, r.reasons.join(", "));
    }
    let nothing = recommend_content(&catalog, &LearnerRecord::new("max"), Some(&corpus)).unwrap();
    println!("a learner without domain goals gets {} recommendation(s)", nothing.len());
}
