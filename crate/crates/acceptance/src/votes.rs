//! Vote counting for technique suggestions and a full recompute of the
//! strategy profile.

use std::collections::BTreeMap;

/// One manual assignment: learner, signature key, technique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote {
    pub learner: String,
    pub signature: String,
    pub technique: String,
}

/// Majority technique among the votes that pass `keep`, latest vote winning
/// ties.
fn tally(votes: &[Vote], keep: impl Fn(&Vote) -> bool) -> Option<String> {
    let kept: Vec<&Vote> = votes.iter().filter(|v| keep(v)).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &kept {
        *counts.entry(&v.technique).or_default() += 1;
    }
    let top = counts.values().copied().max()?;
    kept.iter().rev().find(|v| counts[v.technique.as_str()] == top).map(|v| v.technique.clone())
}

/// The learner's own majority, then everyone's, then nothing.
pub fn suggestion(votes: &[Vote], learner: &str, signature: &str) -> Option<String> {
    tally(votes, |v| v.signature == signature && v.learner == learner)
        .or_else(|| tally(votes, |v| v.signature == signature))
}

/// Per-strategy counts and the unclassified remainder for a sequence of
/// event signatures.
///
/// `technique_strategy` resolves suggested techniques; `defaults` maps a
/// signature (exact first, then with its source stripped) to a strategy.
pub fn profile(
    votes: &[Vote],
    learner: &str,
    events: &[(String, String)],
    technique_strategy: &BTreeMap<String, String>,
    defaults: &BTreeMap<String, String>,
) -> (BTreeMap<String, u64>, u64) {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut unclassified = 0;
    for (exact, generic) in events {
        let strategy = suggestion(votes, learner, exact)
            .and_then(|t| technique_strategy.get(&t).cloned())
            .or_else(|| defaults.get(exact).or_else(|| defaults.get(generic)).cloned());
        match strategy {
            Some(s) => *counts.entry(s).or_default() += 1,
            None => unclassified += 1,
        }
    }
    (counts, unclassified)
}
