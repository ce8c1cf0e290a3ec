use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Phase};
use crate::learner::LearnerRecord;
use crate::space::Space;

pub const DEFAULT_MAX_WIDGETS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintConfig {
    pub max_widgets: usize,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            max_widgets: DEFAULT_MAX_WIDGETS,
        }
    }
}

/// Advisory mashup-design findings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    MissingPhaseCoverage { phase: Phase },
    TooManyWidgets { count: usize, max: usize },
    UnfamiliarTool { widget: String },
}

/// Checks a space against the mashup-design guidelines: every phase covered,
/// not too many widgets, and tools the learner knows how to use.
pub fn lint_space(
    catalog: &Catalog,
    space: &Space,
    learner: &LearnerRecord,
    config: &LintConfig,
) -> Vec<Finding> {
    let widgets: BTreeSet<&str> = space.instances().map(|w| w.widget_id.as_str()).collect();
    let covered: BTreeSet<Phase> = widgets
        .iter()
        .flat_map(|w| catalog.phases_of_widget(w))
        .collect();

    let mut findings: Vec<Finding> = Phase::ALL
        .into_iter()
        .filter(|p| !covered.contains(p))
        .map(|phase| Finding::MissingPhaseCoverage { phase })
        .collect();

    let count = space.widget_count();
    if count > config.max_widgets {
        findings.push(Finding::TooManyWidgets {
            count,
            max: config.max_widgets,
        });
    }

    let tools: Vec<(&str, &str)> = learner.tool_competences().collect();
    for w in widgets {
        let techniques = catalog.widget(w).map(|d| d.techniques).unwrap_or_default();
        let familiar = tools
            .iter()
            .any(|(tool, technique)| *tool == w || techniques.contains(*technique));
        if !familiar {
            findings.push(Finding::UnfamiliarTool {
                widget: w.to_string(),
            });
        }
    }
    findings
}
