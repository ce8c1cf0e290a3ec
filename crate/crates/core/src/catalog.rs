//! The SRL ontology and the widget registry.
//!
//! A catalog holds the four process phases, the learning strategies grouped
//! into cognitive, meta-cognitive and resource-management strategies, the
//! learning techniques that implement each strategy, the seven widget store
//! categories, domain vocabularies, and the widgets/bundles linked to
//! techniques. It is loaded from a single TOML document and is immutable
//! after load except for widget paradata (`add_count`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_CATALOG: &str = include_str!("../data/catalog.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("catalog validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("unknown technique `{0}`")]
    UnknownTechnique(String),
    #[error("unknown widget `{0}`")]
    UnknownWidget(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Plan,
    Prepare,
    Learn,
    Reflect,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Plan, Phase::Prepare, Phase::Learn, Phase::Reflect];

    /// The phase that follows this one in the cycle; `Reflect` wraps to `Plan`.
    pub fn next(self) -> Phase {
        match self {
            Phase::Plan => Phase::Prepare,
            Phase::Prepare => Phase::Learn,
            Phase::Learn => Phase::Reflect,
            Phase::Reflect => Phase::Plan,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Plan => "plan",
            Phase::Prepare => "prepare",
            Phase::Learn => "learn",
            Phase::Reflect => "reflect",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyGroup {
    Cognitive,
    MetaCognitive,
    ResourceManagement,
}

impl StrategyGroup {
    pub const ALL: [StrategyGroup; 3] = [
        StrategyGroup::Cognitive,
        StrategyGroup::MetaCognitive,
        StrategyGroup::ResourceManagement,
    ];
}

/// Widget store category. Declaration order is the presentation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Search & Get Recommendation")]
    SearchAndGetRecommendation,
    #[serde(rename = "Plan & Organize")]
    PlanAndOrganize,
    #[serde(rename = "Communicate & Collaborate")]
    CommunicateAndCollaborate,
    #[serde(rename = "Create & Modify")]
    CreateAndModify,
    #[serde(rename = "Train & Test")]
    TrainAndTest,
    #[serde(rename = "Explore & View Content")]
    ExploreAndViewContent,
    #[serde(rename = "Reflect & Evaluate")]
    ReflectAndEvaluate,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::SearchAndGetRecommendation,
        Category::PlanAndOrganize,
        Category::CommunicateAndCollaborate,
        Category::CreateAndModify,
        Category::TrainAndTest,
        Category::ExploreAndViewContent,
        Category::ReflectAndEvaluate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::SearchAndGetRecommendation => "Search & Get Recommendation",
            Category::PlanAndOrganize => "Plan & Organize",
            Category::CommunicateAndCollaborate => "Communicate & Collaborate",
            Category::CreateAndModify => "Create & Modify",
            Category::TrainAndTest => "Train & Test",
            Category::ExploreAndViewContent => "Explore & View Content",
            Category::ReflectAndEvaluate => "Reflect & Evaluate",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// Proficiency on the eight-level European Qualifications Framework scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct EqfLevel(u8);

impl EqfLevel {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 8;

    pub fn new(level: u8) -> Result<Self, String> {
        if (Self::MIN..=Self::MAX).contains(&level) {
            Ok(EqfLevel(level))
        } else {
            Err(format!("EQF level must be within 1..=8, got {level}"))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for EqfLevel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        EqfLevel::new(value)
    }
}

impl From<EqfLevel> for u8 {
    fn from(level: EqfLevel) -> u8 {
        level.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub id: String,
    pub name: String,
    pub group: StrategyGroup,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Technique {
    pub id: String,
    pub name: String,
    pub strategy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: String,
}

/// A concept vocabulary (the "context" of a domain concept).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub id: String,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetDescriptor {
    pub id: String,
    pub title: String,
    pub description: String,
    pub launch_url: String,
    pub techniques: BTreeSet<String>,
    pub categories: BTreeSet<Category>,
    #[serde(rename = "srl")]
    pub srl_flag: bool,
    pub add_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetBundle {
    pub id: String,
    pub title: String,
    pub widgets: Vec<String>,
}

/// Reference to a node of the activity model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityRef {
    Phase(Phase),
    Strategy(String),
    Technique(String),
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Phase(p) => write!(f, "phase:{p}"),
            EntityRef::Strategy(s) => write!(f, "strategy:{s}"),
            EntityRef::Technique(t) => write!(f, "technique:{t}"),
        }
    }
}

impl FromStr for EntityRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, id) = s
            .split_once(':')
            .ok_or_else(|| format!("entity reference `{s}` must look like kind:id"))?;
        if id.is_empty() {
            return Err(format!("entity reference `{s}` has an empty id"));
        }
        match kind {
            "phase" => Ok(EntityRef::Phase(id.parse()?)),
            "strategy" => Ok(EntityRef::Strategy(id.to_string())),
            "technique" => Ok(EntityRef::Technique(id.to_string())),
            _ => Err(format!("unknown entity kind `{kind}`")),
        }
    }
}

impl Serialize for EntityRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A mashup template: an ordered set of activity-model entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub title: String,
    pub entities: Vec<EntityRef>,
}

// ---- document format --------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogDocument {
    pub catalog_version: u32,
    #[serde(default)]
    pub phases: Vec<PhaseDoc>,
    #[serde(default)]
    pub strategies: Vec<StrategyDoc>,
    #[serde(default)]
    pub techniques: Vec<Technique>,
    #[serde(default)]
    pub categories: Vec<CategoryDoc>,
    #[serde(default)]
    pub vocabularies: Vec<Vocabulary>,
    #[serde(default)]
    pub widgets: Vec<WidgetDoc>,
    #[serde(default)]
    pub bundles: Vec<WidgetBundle>,
    #[serde(default)]
    pub templates: Vec<TemplateDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDoc {
    pub id: String,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub id: String,
    pub name: String,
    pub group: StrategyGroup,
    pub phase: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryDoc {
    pub id: String,
    pub phases: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidgetDoc {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub launch_url: String,
    #[serde(default)]
    pub techniques: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub srl: bool,
    #[serde(default)]
    pub add_count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateDoc {
    pub id: String,
    pub title: String,
    pub entities: Vec<String>,
}

// ---- catalog ----------------------------------------------------------------

struct WidgetEntry {
    descriptor: WidgetDescriptor,
    add_count: AtomicU64,
}

pub struct Catalog {
    version: u32,
    phase_names: BTreeMap<Phase, String>,
    strategies: Vec<Strategy>,
    strategy_index: HashMap<String, usize>,
    techniques: BTreeMap<String, Technique>,
    categories: BTreeMap<Category, BTreeSet<Phase>>,
    vocabularies: BTreeMap<String, Vocabulary>,
    widgets: BTreeMap<String, WidgetEntry>,
    widgets_by_technique: HashMap<String, BTreeSet<String>>,
    bundles: Vec<WidgetBundle>,
    templates: Vec<Template>,
}

impl fmt::Debug for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Catalog")
            .field("version", &self.version)
            .field("strategies", &self.strategies.len())
            .field("techniques", &self.techniques.len())
            .field("widgets", &self.widgets.len())
            .finish()
    }
}

impl Catalog {
    /// The catalog shipped with the crate.
    pub fn default_catalog() -> Catalog {
        Catalog::from_toml_str(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }

    /// Raw text of the bundled catalog document.
    pub fn default_document_text() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Catalog::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Catalog, CatalogError> {
        let doc: CatalogDocument =
            toml::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        Catalog::from_document(doc)
    }

    /// Validates a parsed document and builds the cross-referenced catalog.
    /// Every problem found is reported, not just the first.
    pub fn from_document(doc: CatalogDocument) -> Result<Catalog, CatalogError> {
        let mut problems = Vec::new();

        let mut phase_names = BTreeMap::new();
        for p in &doc.phases {
            match p.id.parse::<Phase>() {
                Ok(phase) => {
                    if phase_names.insert(phase, p.name.clone()).is_some() {
                        problems.push(format!("duplicate phase `{}`", p.id));
                    }
                }
                Err(e) => problems.push(e),
            }
        }
        if phase_names.len() != Phase::ALL.len() || doc.phases.len() != Phase::ALL.len() {
            problems.push("phase set must be exactly 4".to_string());
        }

        let mut strategies = Vec::new();
        let mut strategy_index = HashMap::new();
        for s in &doc.strategies {
            let phase = match s.phase.parse::<Phase>() {
                Ok(p) => p,
                Err(_) => {
                    problems.push(format!(
                        "strategy `{}` references unknown phase `{}`",
                        s.id, s.phase
                    ));
                    continue;
                }
            };
            if strategy_index.insert(s.id.clone(), strategies.len()).is_some() {
                problems.push(format!("duplicate strategy `{}`", s.id));
                continue;
            }
            strategies.push(Strategy {
                id: s.id.clone(),
                name: s.name.clone(),
                group: s.group,
                phase,
            });
        }

        let mut techniques = BTreeMap::new();
        for t in &doc.techniques {
            if !strategy_index.contains_key(&t.strategy) {
                problems.push(format!(
                    "technique `{}` references unknown strategy `{}`",
                    t.id, t.strategy
                ));
            }
            if techniques.insert(t.id.clone(), t.clone()).is_some() {
                problems.push(format!("duplicate technique `{}`", t.id));
            }
        }

        let mut categories = BTreeMap::new();
        for c in &doc.categories {
            let category = match c.id.parse::<Category>() {
                Ok(c) => c,
                Err(e) => {
                    problems.push(e);
                    continue;
                }
            };
            let mut phases = BTreeSet::new();
            for p in &c.phases {
                match p.parse::<Phase>() {
                    Ok(p) => {
                        phases.insert(p);
                    }
                    Err(_) => problems.push(format!(
                        "category `{}` references unknown phase `{p}`",
                        c.id
                    )),
                }
            }
            if c.phases.is_empty() {
                problems.push(format!("category `{}` must map to at least one phase", c.id));
            }
            if categories.insert(category, phases).is_some() {
                problems.push(format!("duplicate category `{}`", c.id));
            }
        }
        for c in Category::ALL {
            if !categories.contains_key(&c) {
                problems.push(format!("category `{c}` is missing"));
            }
        }

        let mut vocabularies = BTreeMap::new();
        for v in &doc.vocabularies {
            let mut seen = BTreeSet::new();
            for concept in &v.concepts {
                if !seen.insert(&concept.id) {
                    problems.push(format!(
                        "duplicate concept `{}` in vocabulary `{}`",
                        concept.id, v.id
                    ));
                }
            }
            if vocabularies.insert(v.id.clone(), v.clone()).is_some() {
                problems.push(format!("duplicate vocabulary `{}`", v.id));
            }
        }

        let mut widgets = BTreeMap::new();
        let mut widgets_by_technique: HashMap<String, BTreeSet<String>> = HashMap::new();
        for w in &doc.widgets {
            let mut techs = BTreeSet::new();
            for t in &w.techniques {
                if techniques.contains_key(t) {
                    techs.insert(t.clone());
                    widgets_by_technique
                        .entry(t.clone())
                        .or_default()
                        .insert(w.id.clone());
                } else {
                    problems.push(format!(
                        "widget `{}` references unknown technique `{t}`",
                        w.id
                    ));
                }
            }
            let mut cats = BTreeSet::new();
            for c in &w.categories {
                match c.parse::<Category>() {
                    Ok(c) => {
                        cats.insert(c);
                    }
                    Err(_) => problems.push(format!(
                        "widget `{}` references unknown category `{c}`",
                        w.id
                    )),
                }
            }
            let descriptor = WidgetDescriptor {
                id: w.id.clone(),
                title: w.title.clone(),
                description: w.description.clone(),
                launch_url: w.launch_url.clone(),
                techniques: techs,
                categories: cats,
                srl_flag: w.srl,
                add_count: w.add_count,
            };
            let entry = WidgetEntry {
                descriptor,
                add_count: AtomicU64::new(w.add_count),
            };
            if widgets.insert(w.id.clone(), entry).is_some() {
                problems.push(format!("duplicate widget `{}`", w.id));
            }
        }

        for b in &doc.bundles {
            if b.widgets.is_empty() {
                problems.push(format!("bundle `{}` must contain at least one widget", b.id));
            }
            for w in &b.widgets {
                if !widgets.contains_key(w) {
                    problems.push(format!("bundle `{}` references unknown widget `{w}`", b.id));
                }
            }
        }

        let mut templates = Vec::new();
        for t in &doc.templates {
            if t.entities.is_empty() {
                problems.push(format!("template `{}` must contain at least one entity", t.id));
            }
            let mut entities = Vec::new();
            for e in &t.entities {
                match e.parse::<EntityRef>() {
                    Ok(EntityRef::Strategy(s)) if !strategy_index.contains_key(&s) => problems
                        .push(format!("template `{}` references unknown strategy `{s}`", t.id)),
                    Ok(EntityRef::Technique(x)) if !techniques.contains_key(&x) => problems
                        .push(format!("template `{}` references unknown technique `{x}`", t.id)),
                    Ok(entity) => entities.push(entity),
                    Err(err) => problems.push(format!("template `{}`: {err}", t.id)),
                }
            }
            templates.push(Template {
                id: t.id.clone(),
                title: t.title.clone(),
                entities,
            });
        }

        if !problems.is_empty() {
            return Err(CatalogError::Validation(problems));
        }

        Ok(Catalog {
            version: doc.catalog_version,
            phase_names,
            strategies,
            strategy_index,
            techniques,
            categories,
            vocabularies,
            widgets,
            widgets_by_technique,
            bundles: doc.bundles,
            templates,
        })
    }

    /// Serializes the catalog, including current paradata, back into the
    /// document format.
    pub fn to_document(&self) -> CatalogDocument {
        CatalogDocument {
            catalog_version: self.version,
            phases: self
                .phase_names
                .iter()
                .map(|(p, name)| PhaseDoc {
                    id: p.to_string(),
                    name: name.clone(),
                })
                .collect(),
            strategies: self
                .strategies
                .iter()
                .map(|s| StrategyDoc {
                    id: s.id.clone(),
                    name: s.name.clone(),
                    group: s.group,
                    phase: s.phase.to_string(),
                })
                .collect(),
            techniques: self.techniques.values().cloned().collect(),
            categories: self
                .categories
                .iter()
                .map(|(c, phases)| CategoryDoc {
                    id: c.to_string(),
                    phases: phases.iter().map(|p| p.to_string()).collect(),
                })
                .collect(),
            vocabularies: self.vocabularies.values().cloned().collect(),
            widgets: self
                .widgets()
                .into_iter()
                .map(|w| WidgetDoc {
                    id: w.id,
                    title: w.title,
                    description: w.description,
                    launch_url: w.launch_url,
                    techniques: w.techniques.into_iter().collect(),
                    categories: w.categories.iter().map(|c| c.to_string()).collect(),
                    srl: w.srl_flag,
                    add_count: w.add_count,
                })
                .collect(),
            bundles: self.bundles.clone(),
            templates: self
                .templates
                .iter()
                .map(|t| TemplateDoc {
                    id: t.id.clone(),
                    title: t.title.clone(),
                    entities: t.entities.iter().map(|e| e.to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_document()).expect("catalog document serializes")
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn phases(&self) -> &[Phase] {
        &Phase::ALL
    }

    pub fn phase_name(&self, phase: Phase) -> &str {
        &self.phase_names[&phase]
    }

    /// Strategies in catalog (file) order.
    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn strategy(&self, id: &str) -> Option<&Strategy> {
        self.strategy_index.get(id).map(|&i| &self.strategies[i])
    }

    /// Position of a strategy in catalog order.
    pub fn strategy_position(&self, id: &str) -> Option<usize> {
        self.strategy_index.get(id).copied()
    }

    pub fn strategies_in(&self, phase: Phase) -> impl Iterator<Item = &Strategy> {
        self.strategies.iter().filter(move |s| s.phase == phase)
    }

    pub fn techniques(&self) -> impl Iterator<Item = &Technique> {
        self.techniques.values()
    }

    pub fn technique(&self, id: &str) -> Option<&Technique> {
        self.techniques.get(id)
    }

    pub fn strategy_of_technique(&self, technique: &str) -> Option<&Strategy> {
        self.technique(technique).and_then(|t| self.strategy(&t.strategy))
    }

    pub fn categories(&self) -> &BTreeMap<Category, BTreeSet<Phase>> {
        &self.categories
    }

    pub fn vocabularies(&self) -> impl Iterator<Item = &Vocabulary> {
        self.vocabularies.values()
    }

    pub fn concept(&self, context: &str, concept: &str) -> Option<&Concept> {
        self.vocabularies
            .get(context)?
            .concepts
            .iter()
            .find(|c| c.id == concept)
    }

    pub fn bundles(&self) -> &[WidgetBundle] {
        &self.bundles
    }

    pub fn bundle(&self, id: &str) -> Option<&WidgetBundle> {
        self.bundles.iter().find(|b| b.id == id)
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn template(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn contains_widget(&self, id: &str) -> bool {
        self.widgets.contains_key(id)
    }

    /// Snapshot of one widget with its current paradata.
    pub fn widget(&self, id: &str) -> Option<WidgetDescriptor> {
        self.widgets.get(id).map(Self::snapshot)
    }

    /// All widgets ordered by id.
    pub fn widgets(&self) -> Vec<WidgetDescriptor> {
        self.widgets.values().map(Self::snapshot).collect()
    }

    fn snapshot(entry: &WidgetEntry) -> WidgetDescriptor {
        WidgetDescriptor {
            add_count: entry.add_count.load(Ordering::SeqCst),
            ..entry.descriptor.clone()
        }
    }

    pub fn add_count(&self, widget: &str) -> Result<u64, CatalogError> {
        self.widgets
            .get(widget)
            .map(|w| w.add_count.load(Ordering::SeqCst))
            .ok_or_else(|| CatalogError::UnknownWidget(widget.to_string()))
    }

    /// Increments the widget's add counter and returns the new value.
    pub fn record_widget_added(&self, widget: &str) -> Result<u64, CatalogError> {
        let entry = self
            .widgets
            .get(widget)
            .ok_or_else(|| CatalogError::UnknownWidget(widget.to_string()))?;
        Ok(entry.add_count.fetch_add(1, Ordering::SeqCst) + 1)
    }

    /// Techniques of a strategy, ordered by id.
    pub fn techniques_for(&self, strategy: &str) -> Result<Vec<&Technique>, CatalogError> {
        if !self.strategy_index.contains_key(strategy) {
            return Err(CatalogError::UnknownStrategy(strategy.to_string()));
        }
        Ok(self
            .techniques
            .values()
            .filter(|t| t.strategy == strategy)
            .collect())
    }

    pub fn check_entity(&self, entity: &EntityRef) -> Result<(), CatalogError> {
        let known = match entity {
            EntityRef::Phase(_) => true,
            EntityRef::Strategy(s) => self.strategy_index.contains_key(s),
            EntityRef::Technique(t) => self.techniques.contains_key(t),
        };
        if known {
            Ok(())
        } else {
            Err(CatalogError::UnknownEntity(entity.to_string()))
        }
    }

    /// Ids of the techniques reachable from an entity.
    pub fn techniques_under(&self, entity: &EntityRef) -> Result<BTreeSet<String>, CatalogError> {
        self.check_entity(entity)?;
        let set = match entity {
            EntityRef::Technique(t) => BTreeSet::from([t.clone()]),
            EntityRef::Strategy(s) => self
                .techniques
                .values()
                .filter(|t| &t.strategy == s)
                .map(|t| t.id.clone())
                .collect(),
            EntityRef::Phase(p) => self
                .techniques
                .values()
                .filter(|t| self.strategy(&t.strategy).is_some_and(|s| s.phase == *p))
                .map(|t| t.id.clone())
                .collect(),
        };
        Ok(set)
    }

    /// Widgets linked to an entity through technique links, de-duplicated and
    /// ordered by id.
    pub fn widgets_for(&self, entity: &EntityRef) -> Result<Vec<WidgetDescriptor>, CatalogError> {
        let ids: BTreeSet<&String> = self
            .techniques_under(entity)?
            .iter()
            .filter_map(|t| self.widgets_by_technique.get(t))
            .flatten()
            .collect();
        Ok(ids
            .into_iter()
            .map(|id| Self::snapshot(&self.widgets[id]))
            .collect())
    }

    /// Phases a widget supports via its techniques' strategies.
    pub fn phases_of_widget(&self, widget: &str) -> BTreeSet<Phase> {
        let Some(entry) = self.widgets.get(widget) else {
            return BTreeSet::new();
        };
        entry
            .descriptor
            .techniques
            .iter()
            .filter_map(|t| self.strategy_of_technique(t))
            .map(|s| s.phase)
            .collect()
    }

    /// Case-insensitive substring search over title and description.
    /// Results are ordered by add count (descending), then id.
    pub fn search_widgets(&self, query: &str, category: Option<Category>) -> Vec<WidgetDescriptor> {
        let needle = query.to_lowercase();
        let mut hits: Vec<WidgetDescriptor> = self
            .widgets
            .values()
            .map(Self::snapshot)
            .filter(|w| {
                w.title.to_lowercase().contains(&needle)
                    || w.description.to_lowercase().contains(&needle)
            })
            .filter(|w| category.is_none_or(|c| w.categories.contains(&c)))
            .collect();
        hits.sort_by(|a, b| b.add_count.cmp(&a.add_count).then_with(|| a.id.cmp(&b.id)));
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> CatalogDocument {
        toml::from_str(DEFAULT_CATALOG).unwrap()
    }

    #[test]
    fn default_catalog_shape() {
        let c = Catalog::default_catalog();
        assert_eq!(c.phases().len(), 4);
        assert_eq!(c.strategies().len(), 9);
        assert_eq!(c.techniques().count(), 31);
        assert_eq!(c.categories().len(), 7);
        for g in StrategyGroup::ALL {
            assert_eq!(c.strategies().iter().filter(|s| s.group == g).count(), 3);
        }
    }

    #[test]
    fn default_strategy_phases() {
        let c = Catalog::default_catalog();
        let phase = |id: &str| c.strategy(id).unwrap().phase;
        assert_eq!(phase("goal_setting"), Phase::Plan);
        assert_eq!(phase("environment_preparation"), Phase::Prepare);
        assert_eq!(phase("help_seeking"), Phase::Prepare);
        for s in ["organisation", "elaboration", "rehearsal", "time_management"] {
            assert_eq!(phase(s), Phase::Learn);
        }
        assert_eq!(phase("self_monitoring"), Phase::Reflect);
        assert_eq!(phase("regulation"), Phase::Reflect);
    }

    #[test]
    fn elaboration_techniques() {
        let c = Catalog::default_catalog();
        let ids: Vec<_> = c
            .techniques_for("elaboration")
            .unwrap()
            .iter()
            .map(|t| t.id.as_str())
            .collect();
        assert!(ids.contains(&"note_taking"));
        assert!(ids.contains(&"brainstorming"));
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn techniques_for_unknown_and_empty() {
        let mut d = doc();
        d.strategies.push(StrategyDoc {
            id: "lonely".into(),
            name: "Lonely".into(),
            group: StrategyGroup::Cognitive,
            phase: "learn".into(),
        });
        let c = Catalog::from_document(d).unwrap();
        assert!(c.techniques_for("lonely").unwrap().is_empty());
        assert!(matches!(
            c.techniques_for("nope"),
            Err(CatalogError::UnknownStrategy(_))
        ));
    }

    #[test]
    fn dangling_technique_is_named() {
        let mut d = doc();
        d.techniques.push(Technique {
            id: "orphan".into(),
            name: "Orphan".into(),
            strategy: "ghost".into(),
        });
        match Catalog::from_document(d) {
            Err(CatalogError::Validation(problems)) => {
                assert_eq!(problems.len(), 1);
                assert!(problems[0].contains("orphan"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_phase_rejected() {
        let mut d = doc();
        d.phases.retain(|p| p.id != "reflect");
        d.strategies.retain(|s| s.phase != "reflect");
        d.techniques
            .retain(|t| t.strategy != "self_monitoring" && t.strategy != "regulation");
        d.categories.iter_mut().for_each(|c| c.phases.retain(|p| p != "reflect"));
        d.categories.retain(|c| !c.phases.is_empty());
        let err = Catalog::from_document(d).unwrap_err();
        assert!(err.to_string().contains("phase set must be exactly 4"), "{err}");
    }

    #[test]
    fn every_problem_is_listed() {
        let mut d = doc();
        d.widgets[0].techniques.push("nope".into());
        d.bundles[0].widgets.push("ghost-widget".into());
        d.widgets[1].categories.push("Dance & Sing".into());
        match Catalog::from_document(d) {
            Err(CatalogError::Validation(problems)) => assert_eq!(problems.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_error_is_distinct() {
        assert!(matches!(
            Catalog::from_toml_str("catalog_version = "),
            Err(CatalogError::Parse(_))
        ));
    }

    #[test]
    fn widgets_for_direct_technique() {
        let c = Catalog::default_catalog();
        let ids: Vec<_> = c
            .widgets_for(&EntityRef::Technique("to_do_listing".into()))
            .unwrap()
            .into_iter()
            .map(|w| w.id)
            .collect();
        assert_eq!(ids, ["to-learn-list"]);
    }

    #[test]
    fn widgets_for_unknown_entity() {
        let c = Catalog::default_catalog();
        assert!(matches!(
            c.widgets_for(&EntityRef::Strategy("nope".into())),
            Err(CatalogError::UnknownEntity(_))
        ));
    }

    #[test]
    fn search_to_do_finds_to_learn_list() {
        let c = Catalog::default_catalog();
        let hits = c.search_widgets("TO DO", None);
        assert_eq!(hits[0].id, "to-learn-list");
        let all = c.search_widgets("", None);
        assert_eq!(all.len(), c.widgets().len());
        let filtered = c.search_widgets("", Some(Category::PlanAndOrganize));
        assert!(filtered
            .iter()
            .all(|w| w.categories.contains(&Category::PlanAndOrganize)));
    }

    #[test]
    fn paradata_increments() {
        let mut d = doc();
        d.widgets[0].add_count = 41;
        let id = d.widgets[0].id.clone();
        let c = Catalog::from_document(d).unwrap();
        assert_eq!(c.record_widget_added(&id).unwrap(), 42);
        assert_eq!(c.record_widget_added("iwc-paint").unwrap(), 1);
        assert!(matches!(
            c.record_widget_added("ghost"),
            Err(CatalogError::UnknownWidget(_))
        ));
    }

    #[test]
    fn entity_ref_parsing() {
        assert_eq!(
            "phase:reflect".parse::<EntityRef>().unwrap(),
            EntityRef::Phase(Phase::Reflect)
        );
        assert!("phase:nap".parse::<EntityRef>().is_err());
        assert!("strategy".parse::<EntityRef>().is_err());
        assert!("tool:x".parse::<EntityRef>().is_err());
    }

    #[test]
    fn eqf_bounds() {
        assert!(EqfLevel::new(0).is_err());
        assert!(EqfLevel::new(9).is_err());
        assert_eq!(EqfLevel::new(8).unwrap().get(), 8);
        assert!(serde_json::from_str::<EqfLevel>("9").is_err());
    }

    #[test]
    fn document_round_trip_keeps_paradata() {
        let c = Catalog::default_catalog();
        c.record_widget_added("iwc-paint").unwrap();
        let again = Catalog::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again.add_count("iwc-paint").unwrap(), 1);
        assert_eq!(again.templates(), c.templates());
    }
}
