//! Core services of a personal learning environment built around
//! self-regulated learning.
//!
//! A [`Catalog`] holds the activity model (phases, strategies, techniques)
//! and the widget registry. Learners assemble widgets into shared
//! [spaces](space), talk through the [realtime hub](realtime), and receive
//! [recommendations](recommend). Every change is written to an append-only
//! [event log](event), from which all state can be rebuilt.

pub mod catalog;
pub mod event;
pub mod learner;
pub mod monitor;
pub mod platform;
pub mod realtime;
pub mod recommend;
pub mod space;

pub use catalog::{Catalog, CatalogError, Category, EntityRef, EqfLevel, Phase, StrategyGroup};
pub use event::{ActivityEvent, EventLog, ManualClock, NewEvent, SystemClock, Verb};
pub use learner::{Competence, CompetenceKind, LearnerRecord, LearnerStore};
pub use monitor::{EventSignature, Monitor, StrategyProfile};
pub use platform::{Platform, PlatformConfig, PlatformError};
pub use realtime::{Frame, Hub};
pub use recommend::{Outcome, Recommendation, SchedulerState};
pub use space::{Layout, Space, SpaceService};
