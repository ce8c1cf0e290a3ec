use std::collections::BTreeSet;

use crate::catalog::{Catalog, CatalogError, EntityRef};
use crate::learner::LearnerRecord;

use super::{sort_recommendations, Recommendation, RecommendationKind};

/// Widgets for a template entity, ranked by the learner's SRL goals.
///
/// Every candidate scores 1, plus 1 for each goal strategy that has at least
/// one technique among the widget's techniques.
pub fn recommend_widgets(
    catalog: &Catalog,
    entity: &EntityRef,
    learner: &LearnerRecord,
) -> Result<Vec<Recommendation>, CatalogError> {
    let candidates = catalog.widgets_for(entity)?;
    let goals: Vec<(String, BTreeSet<String>)> = learner
        .goal_strategies()
        .into_iter()
        .filter_map(|s| {
            let techniques = catalog.techniques_for(&s).ok()?;
            Some((s, techniques.into_iter().map(|t| t.id.clone()).collect()))
        })
        .collect();

    let mut recs: Vec<Recommendation> = candidates
        .into_iter()
        .map(|w| {
            let mut reasons = vec![format!("linked to {entity}")];
            let mut bonus = 0;
            for (strategy, techniques) in &goals {
                if !w.techniques.is_disjoint(techniques) {
                    bonus += 1;
                    reasons.push(format!("supports goal strategy {strategy}"));
                }
            }
            Recommendation {
                kind: RecommendationKind::Widget,
                item_id: w.id,
                score: 1 + bonus,
                add_count: w.add_count,
                reasons,
            }
        })
        .collect();
    sort_recommendations(&mut recs);
    Ok(recs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::EqfLevel;
    use crate::learner::{Competence, CompetenceKind};

    #[test]
    fn organisation_template_entity() {
        let c = Catalog::default_catalog();
        let recs = recommend_widgets(
            &c,
            &EntityRef::Strategy("organisation".into()),
            &LearnerRecord::new("l"),
        )
        .unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.item_id.as_str()).collect();
        assert!(ids.contains(&"share-your-experience"));
        assert!(ids.contains(&"mind-map"));
        assert!(recs.iter().all(|r| r.score == 1));
        // ties fall back to id order when paradata is equal
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn goal_strategy_ranks_higher() {
        let c = Catalog::default_catalog();
        let mut learner = LearnerRecord::new("l");
        learner.upsert(
            Competence::Srl {
                strategy: "self_monitoring".into(),
                level: EqfLevel::new(3).unwrap(),
            },
            CompetenceKind::Goal,
        );
        // self-reflection covers progress_tracking (self_monitoring), learning-diary does not.
        let recs =
            recommend_widgets(&c, &EntityRef::Strategy("regulation".into()), &learner).unwrap();
        let pos = |id: &str| recs.iter().position(|r| r.item_id == id).unwrap();
        assert!(pos("self-reflection") < pos("learning-diary"));
        assert_eq!(recs[pos("self-reflection")].score, 2);
    }

    #[test]
    fn empty_candidates() {
        let mut doc: crate::catalog::CatalogDocument =
            toml::from_str(Catalog::default_document_text()).unwrap();
        doc.widgets.clear();
        doc.bundles.clear();
        let c = Catalog::from_document(doc).unwrap();
        let recs = recommend_widgets(
            &c,
            &EntityRef::Phase(crate::catalog::Phase::Plan),
            &LearnerRecord::new("l"),
        )
        .unwrap();
        assert!(recs.is_empty());
    }
}
