//! Widget spaces: members, activities, widget instances, layout and shared
//! storage.
//!
//! Every mutation is validated, logged as exactly one [`ActivityEvent`], and
//! then applied with the same [`Space::apply`] used by [`replay_spaces`], so a
//! replay of the log reproduces the live state.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::event::{ts_millis, ActivityEvent, EventLog, EventLogError, NewEvent, Verb};

/// Name of the activity every space starts with.
pub const DEFAULT_ACTIVITY: &str = "Start";
/// Width of the layout grid, in grid units.
pub const GRID_COLUMNS: u32 = 12;
pub const DEFAULT_WIDGET_SIZE: u32 = 2;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space name `{0}` is already taken")]
    NameTaken(String),
    #[error("`{0}` is not a valid space name")]
    InvalidName(String),
    #[error("unknown space `{0}`")]
    UnknownSpace(String),
    #[error("`{learner}` is not a member of `{space}`")]
    NotAMember { space: String, learner: String },
    #[error("`{learner}` is already a member of `{space}`")]
    AlreadyMember { space: String, learner: String },
    #[error("the last member cannot leave `{0}`")]
    LastMemberCannotLeave(String),
    #[error("unknown widget `{0}`")]
    UnknownWidget(String),
    #[error("unknown widget instance `{0}`")]
    UnknownInstance(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid activity name")]
    InvalidActivity,
    #[error(transparent)]
    Log(#[from] EventLogError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("event {index}: space `{space}` does not exist")]
    MissingSpace { index: usize, space: String },
    #[error("event {index}: space `{space}` created twice")]
    DuplicateSpace { index: usize, space: String },
    #[error("event {index}: {message}")]
    Inconsistent { index: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Layout {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Layout {
            x,
            y,
            width,
            height,
        }
    }

    fn overlaps(&self, other: &Layout) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }

    fn validate(&self) -> Result<(), SpaceError> {
        if self.width == 0 || self.height == 0 {
            return Err(SpaceError::InvalidLayout(
                "width and height must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetInstance {
    pub instance_id: String,
    pub widget_id: String,
    pub layout: Layout,
    pub added_by: String,
    #[serde(with = "ts_millis")]
    pub added_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub name: String,
    pub widgets: Vec<WidgetInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub learner: String,
    #[serde(with = "ts_millis")]
    pub joined_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub name: String,
    pub owner: String,
    /// Members in join order.
    pub members: Vec<Member>,
    pub activities: Vec<Activity>,
    pub shared_store: BTreeMap<String, Value>,
    #[serde(with = "ts_millis")]
    pub created_at: DateTime<Utc>,
    pub load_count: u64,
    pub load_days: BTreeSet<NaiveDate>,
    next_instance: u64,
}

impl Space {
    fn from_create(event: &ActivityEvent) -> Space {
        Space {
            name: event.object_id.clone(),
            owner: event.actor.clone(),
            members: vec![Member {
                learner: event.actor.clone(),
                joined_at: event.ts,
            }],
            activities: vec![Activity {
                name: DEFAULT_ACTIVITY.to_string(),
                widgets: Vec::new(),
            }],
            shared_store: BTreeMap::new(),
            created_at: event.ts,
            load_count: 0,
            load_days: BTreeSet::new(),
            next_instance: 1,
        }
    }

    pub fn is_member(&self, learner: &str) -> bool {
        self.members.iter().any(|m| m.learner == learner)
    }

    pub fn member_ids(&self) -> Vec<String> {
        self.members.iter().map(|m| m.learner.clone()).collect()
    }

    pub fn activity(&self, name: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.name == name)
    }

    pub fn instances(&self) -> impl Iterator<Item = &WidgetInstance> {
        self.activities.iter().flat_map(|a| a.widgets.iter())
    }

    pub fn instance(&self, instance_id: &str) -> Option<&WidgetInstance> {
        self.instances().find(|w| w.instance_id == instance_id)
    }

    pub fn widget_count(&self) -> usize {
        self.instances().count()
    }

    fn instance_mut(&mut self, instance_id: &str) -> Option<&mut WidgetInstance> {
        self.activities
            .iter_mut()
            .flat_map(|a| a.widgets.iter_mut())
            .find(|w| w.instance_id == instance_id)
    }

    /// First free slot of the default size, scanning the grid row-major.
    fn free_slot(&self, activity: &str) -> Layout {
        let taken: Vec<Layout> = self
            .activity(activity)
            .map(|a| a.widgets.iter().map(|w| w.layout).collect())
            .unwrap_or_default();
        let size = DEFAULT_WIDGET_SIZE;
        for y in 0.. {
            for x in 0..=GRID_COLUMNS - size {
                let candidate = Layout::new(x, y, size, size);
                if taken.iter().all(|t| !t.overlaps(&candidate)) {
                    return candidate;
                }
            }
        }
        unreachable!("grid is unbounded downwards")
    }

    /// Applies one logged event. Events for other spaces and verbs that do not
    /// change space state are ignored.
    pub fn apply(&mut self, event: &ActivityEvent) -> Result<(), String> {
        match event.verb {
            Verb::SpaceJoin => {
                if self.is_member(&event.actor) {
                    return Err(format!("{} joined twice", event.actor));
                }
                self.members.push(Member {
                    learner: event.actor.clone(),
                    joined_at: event.ts,
                });
            }
            Verb::SpaceLeave => {
                let before = self.members.len();
                self.members.retain(|m| m.learner != event.actor);
                if self.members.len() == before {
                    return Err(format!("{} left without being a member", event.actor));
                }
                if self.owner == event.actor {
                    let heir = self
                        .members
                        .first()
                        .ok_or_else(|| "last member left".to_string())?;
                    self.owner = heir.learner.clone();
                }
            }
            Verb::SpaceLoad => {
                self.load_count += 1;
                self.load_days.insert(event.ts.date_naive());
            }
            Verb::WidgetAdd => {
                let activity = event
                    .detail_str("activity")
                    .ok_or("widget.add without activity")?
                    .to_string();
                let widget_id = event
                    .detail_str("widget_id")
                    .ok_or("widget.add without widget_id")?
                    .to_string();
                let layout: Layout = event
                    .details
                    .get("layout")
                    .cloned()
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|e| e.to_string())?
                    .ok_or("widget.add without layout")?;
                if self.instance(&event.object_id).is_some() {
                    return Err(format!("instance {} added twice", event.object_id));
                }
                let instance = WidgetInstance {
                    instance_id: event.object_id.clone(),
                    widget_id,
                    layout,
                    added_by: event.actor.clone(),
                    added_at: event.ts,
                };
                if let Some(n) = event
                    .object_id
                    .strip_prefix('w')
                    .and_then(|n| n.parse::<u64>().ok())
                {
                    self.next_instance = self.next_instance.max(n + 1);
                }
                match self.activities.iter_mut().find(|a| a.name == activity) {
                    Some(a) => a.widgets.push(instance),
                    None => self.activities.push(Activity {
                        name: activity,
                        widgets: vec![instance],
                    }),
                }
            }
            Verb::WidgetRemove => {
                let mut found = false;
                for a in &mut self.activities {
                    let before = a.widgets.len();
                    a.widgets.retain(|w| w.instance_id != event.object_id);
                    found |= a.widgets.len() != before;
                }
                if !found {
                    return Err(format!("unknown instance {}", event.object_id));
                }
            }
            Verb::WidgetLayout => {
                let layout: Layout = event
                    .details
                    .get("layout")
                    .cloned()
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|e| e.to_string())?
                    .ok_or("widget.layout without layout")?;
                self.instance_mut(&event.object_id)
                    .ok_or_else(|| format!("unknown instance {}", event.object_id))?
                    .layout = layout;
            }
            Verb::StorePut => match event.details.get("value") {
                None | Some(Value::Null) => {
                    self.shared_store.remove(&event.object_id);
                }
                Some(v) => {
                    self.shared_store.insert(event.object_id.clone(), v.clone());
                }
            },
            _ => {}
        }
        Ok(())
    }
}

/// Rebuilds every space from an event stream.
pub fn replay_spaces(events: &[ActivityEvent]) -> Result<BTreeMap<String, Space>, ReplayError> {
    let mut spaces: BTreeMap<String, Space> = BTreeMap::new();
    for (index, e) in events.iter().enumerate() {
        let Some(name) = e.space.as_deref() else {
            continue;
        };
        if e.verb == Verb::SpaceCreate {
            if spaces.contains_key(name) {
                return Err(ReplayError::DuplicateSpace {
                    index,
                    space: name.to_string(),
                });
            }
            spaces.insert(name.to_string(), Space::from_create(e));
            continue;
        }
        if !affects_space(e.verb) {
            continue;
        }
        let space = spaces.get_mut(name).ok_or_else(|| ReplayError::MissingSpace {
            index,
            space: name.to_string(),
        })?;
        space
            .apply(e)
            .map_err(|message| ReplayError::Inconsistent { index, message })?;
    }
    Ok(spaces)
}

fn affects_space(verb: Verb) -> bool {
    matches!(
        verb,
        Verb::SpaceJoin
            | Verb::SpaceLeave
            | Verb::SpaceLoad
            | Verb::WidgetAdd
            | Verb::WidgetRemove
            | Verb::WidgetLayout
            | Verb::StorePut
    )
}

/// URL-safe: non-empty, at most 128 characters from `[A-Za-z0-9._~-]`.
pub fn is_valid_space_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~'))
        && name != "."
        && name != ".."
}

pub fn share_path(name: &str) -> String {
    format!("/spaces/{name}")
}

pub struct SpaceService {
    catalog: Arc<Catalog>,
    log: Arc<EventLog>,
    spaces: RwLock<BTreeMap<String, Arc<Mutex<Space>>>>,
}

impl SpaceService {
    pub fn new(catalog: Arc<Catalog>, log: Arc<EventLog>) -> Self {
        SpaceService {
            catalog,
            log,
            spaces: RwLock::new(BTreeMap::new()),
        }
    }

    /// Rebuilds spaces (and widget paradata) from the event log. Logged
    /// additions count on top of `catalog`'s own, so pass a freshly loaded one.
    pub fn recover(catalog: Arc<Catalog>, log: Arc<EventLog>) -> Result<Self, ReplayError> {
        let events = log.events();
        let spaces = replay_spaces(&events)?;
        for e in events.iter().filter(|e| e.verb == Verb::WidgetAdd) {
            if let Some(w) = e.detail_str("widget_id") {
                let _ = catalog.record_widget_added(w);
            }
        }
        Ok(SpaceService {
            catalog,
            log,
            spaces: RwLock::new(
                spaces
                    .into_iter()
                    .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                    .collect(),
            ),
        })
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    fn slot(&self, name: &str) -> Result<Arc<Mutex<Space>>, SpaceError> {
        self.spaces
            .read()
            .expect("space map poisoned")
            .get(name)
            .cloned()
            .ok_or_else(|| SpaceError::UnknownSpace(name.to_string()))
    }

    /// Validates, logs and applies one mutation while holding the space lock.
    fn mutate<T>(
        &self,
        name: &str,
        f: impl FnOnce(&Space) -> Result<(NewEvent, T), SpaceError>,
    ) -> Result<(Space, T), SpaceError> {
        let slot = self.slot(name)?;
        let mut space = slot.lock().expect("space poisoned");
        let (event, out) = f(&space)?;
        let event = self.log.record(event.in_space(name))?;
        space
            .apply(&event)
            .expect("validated mutation applies cleanly");
        Ok((space.clone(), out))
    }

    fn require_member(space: &Space, learner: &str) -> Result<(), SpaceError> {
        if space.is_member(learner) {
            Ok(())
        } else {
            Err(SpaceError::NotAMember {
                space: space.name.clone(),
                learner: learner.to_string(),
            })
        }
    }

    pub fn create_space(&self, name: &str, creator: &str) -> Result<Space, SpaceError> {
        if !is_valid_space_name(name) {
            return Err(SpaceError::InvalidName(name.to_string()));
        }
        let mut spaces = self.spaces.write().expect("space map poisoned");
        if spaces.contains_key(name) {
            return Err(SpaceError::NameTaken(name.to_string()));
        }
        let event = self.log.record(
            NewEvent::new(creator, Verb::SpaceCreate, "space", name).in_space(name),
        )?;
        let space = Space::from_create(&event);
        spaces.insert(name.to_string(), Arc::new(Mutex::new(space.clone())));
        Ok(space)
    }

    pub fn join_space(&self, name: &str, learner: &str) -> Result<Space, SpaceError> {
        self.mutate(name, |space| {
            if space.is_member(learner) {
                return Err(SpaceError::AlreadyMember {
                    space: name.to_string(),
                    learner: learner.to_string(),
                });
            }
            Ok((NewEvent::new(learner, Verb::SpaceJoin, "space", name), ()))
        })
        .map(|(s, _)| s)
    }

    /// Removes a member. An owner who leaves hands ownership to the earliest
    /// joined remaining member; the last member cannot leave.
    pub fn leave_space(&self, name: &str, learner: &str) -> Result<Space, SpaceError> {
        self.mutate(name, |space| {
            Self::require_member(space, learner)?;
            if space.members.len() == 1 {
                return Err(SpaceError::LastMemberCannotLeave(name.to_string()));
            }
            Ok((NewEvent::new(learner, Verb::SpaceLeave, "space", name), ()))
        })
        .map(|(s, _)| s)
    }

    /// Adds a widget instance to an activity (created on demand) at the first
    /// free grid slot, and bumps the widget's paradata.
    pub fn add_widget(
        &self,
        name: &str,
        activity: &str,
        widget_id: &str,
        actor: &str,
    ) -> Result<WidgetInstance, SpaceError> {
        if !self.catalog.contains_widget(widget_id) {
            return Err(SpaceError::UnknownWidget(widget_id.to_string()));
        }
        if activity.trim().is_empty() {
            return Err(SpaceError::InvalidActivity);
        }
        let (space, instance_id) = self.mutate(name, |space| {
            Self::require_member(space, actor)?;
            let instance_id = format!("w{}", space.next_instance);
            let layout = space.free_slot(activity);
            let event = NewEvent::new(actor, Verb::WidgetAdd, "widget", instance_id.clone())
                .with_details(json!({
                    "widget_id": widget_id,
                    "activity": activity,
                    "layout": layout,
                }));
            Ok((event, instance_id))
        })?;
        self.catalog
            .record_widget_added(widget_id)
            .map_err(|_| SpaceError::UnknownWidget(widget_id.to_string()))?;
        Ok(space
            .instance(&instance_id)
            .cloned()
            .expect("instance was just added"))
    }

    pub fn remove_widget(&self, name: &str, instance_id: &str, actor: &str) -> Result<(), SpaceError> {
        self.mutate(name, |space| {
            Self::require_member(space, actor)?;
            let instance = space
                .instance(instance_id)
                .ok_or_else(|| SpaceError::UnknownInstance(instance_id.to_string()))?;
            let event = NewEvent::new(actor, Verb::WidgetRemove, "widget", instance_id)
                .with_details(json!({ "widget_id": instance.widget_id }));
            Ok((event, ()))
        })
        .map(|_| ())
    }

    pub fn set_layout(
        &self,
        name: &str,
        instance_id: &str,
        layout: Layout,
        actor: &str,
    ) -> Result<(), SpaceError> {
        layout.validate()?;
        self.mutate(name, |space| {
            Self::require_member(space, actor)?;
            let instance = space
                .instance(instance_id)
                .ok_or_else(|| SpaceError::UnknownInstance(instance_id.to_string()))?;
            let event = NewEvent::new(actor, Verb::WidgetLayout, "widget", instance_id)
                .with_details(json!({ "widget_id": instance.widget_id, "layout": layout }));
            Ok((event, ()))
        })
        .map(|_| ())
    }

    /// Writes (or with `Value::Null`, deletes) a shared-store entry.
    pub fn put_shared(&self, name: &str, key: &str, value: Value, actor: &str) -> Result<(), SpaceError> {
        self.mutate(name, |space| {
            Self::require_member(space, actor)?;
            let event = NewEvent::new(actor, Verb::StorePut, "store", key)
                .with_details(json!({ "value": value }));
            Ok((event, ()))
        })
        .map(|_| ())
    }

    /// Returns the full space state and counts the load.
    pub fn load_space(&self, name: &str, actor: &str) -> Result<Space, SpaceError> {
        self.mutate(name, |_| {
            Ok((NewEvent::new(actor, Verb::SpaceLoad, "space", name), ()))
        })
        .map(|(s, _)| s)
    }

    /// Logs that a widget instance was opened.
    pub fn load_widget(
        &self,
        name: &str,
        instance_id: &str,
        actor: &str,
    ) -> Result<WidgetInstance, SpaceError> {
        self.mutate(name, |space| {
            let instance = space
                .instance(instance_id)
                .cloned()
                .ok_or_else(|| SpaceError::UnknownInstance(instance_id.to_string()))?;
            let event = NewEvent::new(actor, Verb::WidgetLoad, "widget", instance_id)
                .with_details(json!({ "widget_id": instance.widget_id }));
            Ok((event, instance))
        })
        .map(|(_, w)| w)
    }

    /// Logs a widget-internal learner action such as tagging a paragraph.
    pub fn widget_action(
        &self,
        name: &str,
        instance_id: &str,
        actor: &str,
        action: &str,
        details: Value,
    ) -> Result<ActivityEvent, SpaceError> {
        let slot = self.slot(name)?;
        let space = slot.lock().expect("space poisoned");
        Self::require_member(&space, actor)?;
        let instance = space
            .instance(instance_id)
            .ok_or_else(|| SpaceError::UnknownInstance(instance_id.to_string()))?;
        let event = self.log.record(
            NewEvent::new(actor, Verb::WidgetAction, action, instance_id)
                .in_space(name)
                .with_details(json!({ "widget_id": instance.widget_id, "data": details })),
        )?;
        Ok(event)
    }

    /// Current state without counting a load.
    pub fn get(&self, name: &str) -> Result<Space, SpaceError> {
        Ok(self.slot(name)?.lock().expect("space poisoned").clone())
    }

    pub fn is_member(&self, name: &str, learner: &str) -> Result<bool, SpaceError> {
        Ok(self.slot(name)?.lock().expect("space poisoned").is_member(learner))
    }

    pub fn share_url(&self, name: &str) -> Result<String, SpaceError> {
        self.slot(name)?;
        Ok(share_path(name))
    }

    pub fn names(&self) -> Vec<String> {
        self.spaces.read().expect("space map poisoned").keys().cloned().collect()
    }

    pub fn snapshot(&self) -> BTreeMap<String, Space> {
        self.spaces
            .read()
            .expect("space map poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.lock().expect("space poisoned").clone()))
            .collect()
    }
}
