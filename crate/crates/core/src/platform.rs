//! One handle over all services, sharing a catalog and an event log.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde_json::json;
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, EntityRef};
use crate::event::{ActivityEvent, EventLog, EventLogError, NewEvent, SystemClock, Verb};
use crate::learner::{LearnerError, LearnerStore};
use crate::monitor::{DefaultMapping, Monitor, MonitorError, StrategyProfile};
use crate::realtime::Hub;
use crate::recommend::{
    lint_space, next_activity, record_outcome, recommend_content, recommend_widgets,
    ContentCorpus, Finding, LintConfig, Outcome, OutcomeResult, Recommendation,
    RecommendError, SchedulerConfig, SchedulerState,
};
use crate::space::{ReplayError, SpaceError, SpaceService, WidgetInstance};

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Log(#[from] EventLogError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Default)]
pub struct PlatformConfig {
    /// Catalog document; the shipped default when absent.
    pub catalog: Option<PathBuf>,
    /// JSON Lines event log; in memory when absent.
    pub event_log: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Event-to-strategy table for the monitor; the shipped one when absent.
    pub monitor_defaults: Option<PathBuf>,
    pub scheduler: SchedulerConfig,
    pub lint: LintConfig,
}

pub struct Platform {
    pub catalog: Arc<Catalog>,
    pub log: Arc<EventLog>,
    pub learners: Arc<LearnerStore>,
    pub spaces: Arc<SpaceService>,
    pub hub: Arc<Hub>,
    pub monitor: Arc<Monitor>,
    corpus: Option<ContentCorpus>,
    schedulers: Mutex<HashMap<String, SchedulerState>>,
    scheduler_config: SchedulerConfig,
    lint_config: LintConfig,
}

const ACTIVITY: &str = "activity";
const DRILL_DOWN: &str = "activity.techniques";

impl Platform {
    /// Services over an existing catalog and log, recovering state from the
    /// events already in the log.
    pub fn with_log(catalog: Arc<Catalog>, log: Arc<EventLog>) -> Result<Self, PlatformError> {
        let monitor = Monitor::new(catalog.clone());
        Self::assemble(catalog, log, monitor, None, SchedulerConfig::default(), LintConfig::default())
    }

    pub fn open(config: &PlatformConfig) -> Result<Self, PlatformError> {
        let catalog = Arc::new(match &config.catalog {
            Some(path) => Catalog::load(path)?,
            None => Catalog::default_catalog(),
        });
        let clock = Arc::new(SystemClock);
        let log = Arc::new(match &config.event_log {
            Some(path) => EventLog::open(path, clock)?,
            None => EventLog::in_memory(clock),
        });
        let corpus = config.corpus.as_ref().map(ContentCorpus::load).transpose()?;
        let defaults = match &config.monitor_defaults {
            Some(path) => DefaultMapping::load(path, &catalog)?,
            None => DefaultMapping::standard(&catalog),
        };
        let monitor = Monitor::with_defaults(catalog.clone(), defaults);
        Self::assemble(catalog, log, monitor, corpus, config.scheduler, config.lint)
    }

    fn assemble(
        catalog: Arc<Catalog>,
        log: Arc<EventLog>,
        monitor: Monitor,
        corpus: Option<ContentCorpus>,
        scheduler_config: SchedulerConfig,
        lint_config: LintConfig,
    ) -> Result<Self, PlatformError> {
        let spaces = Arc::new(SpaceService::recover(catalog.clone(), log.clone())?);
        let learners = Arc::new(LearnerStore::recover(catalog.clone(), log.clone()));
        let hub = Arc::new(Hub::new(spaces.clone(), log.clone()));
        let platform = Platform {
            catalog,
            log,
            learners,
            spaces,
            hub,
            monitor: Arc::new(monitor),
            corpus,
            schedulers: Mutex::new(HashMap::new()),
            scheduler_config,
            lint_config,
        };
        platform.replay_schedulers();
        Ok(platform)
    }

    pub fn set_corpus(&mut self, corpus: ContentCorpus) {
        self.corpus = Some(corpus);
    }

    /// Rebuilds scheduler states by re-running the logged activity
    /// recommendations and outcomes. The scheduler is deterministic, so this
    /// reproduces the states that were live when the log was written.
    fn replay_schedulers(&self) {
        let mut states = self.schedulers.lock().expect("schedulers poisoned");
        for e in self.log.events() {
            if !matches!(e.object_type.as_str(), ACTIVITY | DRILL_DOWN) {
                continue;
            }
            let state = states
                .entry(e.actor.clone())
                .or_insert_with(|| SchedulerState::new(e.actor.clone()));
            let record = self.learners.get_or_empty(&e.actor);
            let outcome = match (e.verb, e.object_type.as_str()) {
                (Verb::RecommendationShown, ACTIVITY) => {
                    let (rec, next) = next_activity(&self.catalog, state, &self.scheduler_config);
                    if rec.item_id == e.object_id {
                        *state = next;
                    }
                    continue;
                }
                (Verb::RecommendationShown, _) => Outcome::DrillDown,
                (Verb::RecommendationAccepted, _) => Outcome::Accepted,
                (Verb::RecommendationSkipped, _) => Outcome::Skipped,
                _ => continue,
            };
            let Some(rec) = pending_item(state, &e.object_id) else {
                continue;
            };
            if let Ok(out) =
                record_outcome(&self.catalog, &record, state, &rec, outcome, &self.scheduler_config)
            {
                *state = out.state;
            }
        }
    }

    fn record(&self, event: NewEvent) -> Result<ActivityEvent, PlatformError> {
        Ok(self.log.record(event)?)
    }

    pub fn recommend_widgets(
        &self,
        entity: &EntityRef,
        learner: &str,
    ) -> Result<Vec<Recommendation>, PlatformError> {
        let record = self.learners.get_or_empty(learner);
        let recs = recommend_widgets(&self.catalog, entity, &record)?;
        let items: Vec<&str> = recs.iter().map(|r| r.item_id.as_str()).collect();
        self.record(
            NewEvent::new(learner, Verb::RecommendationShown, "widget", entity.to_string())
                .with_details(json!({ "items": items })),
        )?;
        Ok(recs)
    }

    /// Adds a recommended widget to a space.
    pub fn accept_widget_recommendation(
        &self,
        space: &str,
        activity: &str,
        widget_id: &str,
        actor: &str,
    ) -> Result<WidgetInstance, PlatformError> {
        if !self.catalog.contains_widget(widget_id) {
            return Err(SpaceError::UnknownWidget(widget_id.to_string()).into());
        }
        if !self.spaces.is_member(space, actor)? {
            return Err(SpaceError::NotAMember {
                space: space.to_string(),
                learner: actor.to_string(),
            }
            .into());
        }
        self.record(
            NewEvent::new(actor, Verb::RecommendationAccepted, "widget", widget_id).in_space(space),
        )?;
        Ok(self.spaces.add_widget(space, activity, widget_id, actor)?)
    }

    pub fn scheduler_state(&self, learner: &str) -> SchedulerState {
        self.schedulers
            .lock()
            .expect("schedulers poisoned")
            .get(learner)
            .cloned()
            .unwrap_or_else(|| SchedulerState::new(learner))
    }

    /// The next activity for a learner. Repeated calls without an outcome
    /// return the same pending recommendation.
    pub fn next_activity(&self, learner: &str) -> Result<Recommendation, PlatformError> {
        let mut states = self.schedulers.lock().expect("schedulers poisoned");
        let state = states
            .entry(learner.to_string())
            .or_insert_with(|| SchedulerState::new(learner));
        if let Some(pending) = &state.pending {
            return Ok(pending.recommendation.clone());
        }
        let (rec, next) = next_activity(&self.catalog, state, &self.scheduler_config);
        self.record(NewEvent::new(
            learner,
            Verb::RecommendationShown,
            ACTIVITY,
            rec.item_id.clone(),
        ))?;
        *state = next;
        Ok(rec)
    }

    /// Records the learner's reaction to an offered activity (or to one of the
    /// techniques offered after a drill-down). Accepting a technique adds it
    /// to the learner's application history.
    pub fn activity_outcome(
        &self,
        learner: &str,
        item_id: &str,
        outcome: Outcome,
    ) -> Result<OutcomeResult, PlatformError> {
        let mut states = self.schedulers.lock().expect("schedulers poisoned");
        let state = states
            .entry(learner.to_string())
            .or_insert_with(|| SchedulerState::new(learner));
        let rec = pending_item(state, item_id)
            .ok_or_else(|| RecommendError::StaleRecommendation(item_id.to_string()))?;
        let record = self.learners.get_or_empty(learner);
        let result = record_outcome(
            &self.catalog,
            &record,
            state,
            &rec,
            outcome,
            &self.scheduler_config,
        )?;
        let (verb, object_type) = match outcome {
            Outcome::Accepted => (Verb::RecommendationAccepted, ACTIVITY),
            Outcome::Skipped => (Verb::RecommendationSkipped, ACTIVITY),
            Outcome::DrillDown => (Verb::RecommendationShown, DRILL_DOWN),
        };
        let mut event = NewEvent::new(learner, verb, object_type, item_id);
        if let Some(techniques) = &result.techniques {
            let items: Vec<&str> = techniques.iter().map(|t| t.item_id.as_str()).collect();
            event = event.with_details(json!({ "items": items }));
        }
        self.record(event)?;
        if let Some(technique) = &result.applied {
            let now = self.log.clock().now();
            self.learners.record_application(learner, technique, now)?;
        }
        *state = result.state.clone();
        Ok(result)
    }

    pub fn recommend_content(&self, learner: &str) -> Result<Vec<Recommendation>, PlatformError> {
        let record = self.learners.get_or_empty(learner);
        Ok(recommend_content(&self.catalog, &record, self.corpus.as_ref())?)
    }

    pub fn lint_space(&self, space: &str, learner: &str) -> Result<Vec<Finding>, PlatformError> {
        let space = self.spaces.get(space)?;
        let record = self.learners.get_or_empty(learner);
        Ok(lint_space(&self.catalog, &space, &record, &self.lint_config))
    }

    /// Opens a widget instance and counts it as a use of that tool.
    pub fn load_widget(
        &self,
        space: &str,
        instance_id: &str,
        actor: &str,
    ) -> Result<WidgetInstance, PlatformError> {
        let instance = self.spaces.load_widget(space, instance_id, actor)?;
        self.learners.record_use(actor, &instance.widget_id)?;
        Ok(instance)
    }

    /// The learner's own logged events.
    pub fn learner_events(&self, learner: &str) -> Vec<ActivityEvent> {
        self.log.for_actor(learner)
    }

    pub fn strategy_profile(&self, learner: &str) -> StrategyProfile {
        self.monitor.profile(learner, &self.learner_events(learner))
    }
}

fn pending_item(state: &SchedulerState, item_id: &str) -> Option<Recommendation> {
    let pending = state.pending.as_ref()?;
    if pending.recommendation.item_id == item_id {
        return Some(pending.recommendation.clone());
    }
    pending.drilled.iter().find(|r| r.item_id == item_id).cloned()
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::event::ManualClock;

    fn platform() -> (Platform, Arc<EventLog>) {
        let clock = ManualClock::at(Utc.with_ymd_and_hms(2013, 5, 2, 9, 0, 0).unwrap());
        let log = Arc::new(EventLog::in_memory(Arc::new(clock)));
        let p = Platform::with_log(Arc::new(Catalog::default_catalog()), log.clone()).unwrap();
        (p, log)
    }

    #[test]
    fn accepting_a_widget_adds_it_and_counts_paradata() {
        let (p, _) = platform();
        p.spaces.create_space("quadratic-functions", "dominik").unwrap();
        let before = p.catalog.add_count("to-learn-list").unwrap();
        let w = p
            .accept_widget_recommendation("quadratic-functions", "Start", "to-learn-list", "dominik")
            .unwrap();
        assert_eq!(w.widget_id, "to-learn-list");
        assert_eq!(p.catalog.add_count("to-learn-list").unwrap(), before + 1);
        assert!(matches!(
            p.accept_widget_recommendation("quadratic-functions", "Start", "to-learn-list", "eve"),
            Err(PlatformError::Space(SpaceError::NotAMember { .. }))
        ));
    }

    #[test]
    fn accepted_technique_is_applied() {
        let (p, _) = platform();
        let rec = p.next_activity("lea").unwrap();
        assert_eq!(p.next_activity("lea").unwrap(), rec);
        let out = p.activity_outcome("lea", &rec.item_id, Outcome::DrillDown).unwrap();
        let technique = out.techniques.unwrap()[0].item_id.clone();
        p.activity_outcome("lea", &technique, Outcome::Accepted).unwrap();
        assert_eq!(p.learners.get("lea").unwrap().applies.len(), 1);
        assert!(matches!(
            p.activity_outcome("lea", &technique, Outcome::Accepted),
            Err(PlatformError::Recommend(RecommendError::StaleRecommendation(_)))
        ));
    }

    #[test]
    fn scheduler_survives_restart() {
        let (p, log) = platform();
        for i in 0..12 {
            let rec = p.next_activity("lea").unwrap();
            let outcome = if i % 3 == 0 { Outcome::Skipped } else { Outcome::Accepted };
            p.activity_outcome("lea", &rec.item_id, outcome).unwrap();
        }
        p.next_activity("lea").unwrap();
        let before = p.scheduler_state("lea");
        let restarted = Platform::with_log(Arc::new(Catalog::default_catalog()), log).unwrap();
        assert_eq!(restarted.scheduler_state("lea"), before);
    }
}
