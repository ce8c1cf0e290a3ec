//! Per-space real-time services: inter-widget publish/subscribe, chat and
//! presence.
//!
//! Each connection belongs to exactly one space and receives [`Frame`]s on
//! its own channel. Messages never cross space boundaries. Every publish is
//! stamped with a per-(publisher, topic) sequence number starting at 1 so
//! receivers can de-duplicate redelivered frames (see [`Deduper`]).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::mpsc;

use crate::event::{ts_millis, EventLog, EventLogError, NewEvent, Verb};
use crate::space::{SpaceError, SpaceService};

#[derive(Debug, Error)]
pub enum HubError {
    #[error("`{learner}` is not a member of `{space}`")]
    NotAMember { space: String, learner: String },
    #[error("connection {0} is closed")]
    ConnectionClosed(ConnectionId),
    #[error("empty chat message")]
    EmptyMessage,
    #[error("topic must not be empty")]
    EmptyTopic,
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Log(#[from] EventLogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConnectionId(pub u64);

impl fmt::Display for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Sub,
    Unsub,
    Pub,
    Chat,
    Presence,
}

/// The wire frame exchanged over the `/rt` channel, one JSON object per
/// message. Absent fields are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    /// Publishing connection, set on frames sent by the server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<ConnectionId>,
}

impl Frame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }

    pub fn parse(text: &str) -> Result<Frame, HubError> {
        serde_json::from_str(text).map_err(|e| HubError::MalformedFrame(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IwcMessage {
    pub publisher: ConnectionId,
    pub space: String,
    pub topic: String,
    pub seq: u64,
    pub payload: Value,
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub space: String,
    pub author: String,
    pub text: String,
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PresenceState {
    pub space: String,
    pub online: BTreeSet<String>,
}

/// Something delivered to a connection.
#[derive(Debug, Clone, PartialEq)]
pub enum Delivery {
    Iwc(IwcMessage),
    Chat(ChatMessage),
    Presence(PresenceState),
}

impl Delivery {
    pub fn to_frame(&self) -> Frame {
        match self {
            Delivery::Iwc(m) => Frame {
                kind: FrameKind::Pub,
                topic: Some(m.topic.clone()),
                payload: Some(m.payload.clone()),
                seq: Some(m.seq),
                from: Some(m.publisher),
            },
            Delivery::Chat(c) => Frame {
                kind: FrameKind::Chat,
                topic: None,
                payload: Some(json!({
                    "author": c.author,
                    "text": c.text,
                    "ts": c.ts.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                })),
                seq: None,
                from: None,
            },
            Delivery::Presence(p) => Frame {
                kind: FrameKind::Presence,
                topic: None,
                payload: Some(json!({ "online": p.online })),
                seq: None,
                from: None,
            },
        }
    }
}

/// Receiving end handed to a connected client.
pub type Inbox = mpsc::UnboundedReceiver<Delivery>;

struct Connection {
    learner: String,
    space: String,
    tx: mpsc::UnboundedSender<Delivery>,
    seqs: HashMap<String, u64>,
}

#[derive(Default)]
struct HubState {
    next_id: u64,
    connections: HashMap<ConnectionId, Connection>,
    /// (space, topic) -> subscriber -> receives own messages
    channels: HashMap<(String, String), BTreeMap<ConnectionId, bool>>,
    /// space -> learner -> open connection count
    presence: HashMap<String, HashMap<String, usize>>,
}

impl HubState {
    fn online(&self, space: &str) -> BTreeSet<String> {
        self.presence
            .get(space)
            .map(|m| m.iter().filter(|(_, &n)| n > 0).map(|(l, _)| l.clone()).collect())
            .unwrap_or_default()
    }

    fn broadcast(&self, space: &str, delivery: &Delivery) {
        for c in self.connections.values().filter(|c| c.space == space) {
            let _ = c.tx.send(delivery.clone());
        }
    }
}

pub struct Hub {
    spaces: Arc<SpaceService>,
    log: Arc<EventLog>,
    state: Mutex<HubState>,
}

impl Hub {
    pub fn new(spaces: Arc<SpaceService>, log: Arc<EventLog>) -> Self {
        Hub {
            spaces,
            log,
            state: Mutex::new(HubState::default()),
        }
    }

    /// Opens a connection for a member of a space. A presence frame is
    /// broadcast when the learner comes online.
    pub fn connect(&self, learner: &str, space: &str) -> Result<(ConnectionId, Inbox), HubError> {
        if !self.spaces.is_member(space, learner)? {
            return Err(HubError::NotAMember {
                space: space.to_string(),
                learner: learner.to_string(),
            });
        }
        let (tx, rx) = mpsc::unbounded_channel();
        let mut state = self.state.lock().expect("hub poisoned");
        state.next_id += 1;
        let id = ConnectionId(state.next_id);
        state.connections.insert(
            id,
            Connection {
                learner: learner.to_string(),
                space: space.to_string(),
                tx,
                seqs: HashMap::new(),
            },
        );
        let count = state
            .presence
            .entry(space.to_string())
            .or_default()
            .entry(learner.to_string())
            .or_insert(0);
        *count += 1;
        if *count == 1 {
            let presence = Delivery::Presence(PresenceState {
                space: space.to_string(),
                online: state.online(space),
            });
            state.broadcast(space, &presence);
        }
        Ok((id, rx))
    }

    /// Closes a connection. Unknown or already closed ids are ignored.
    pub fn disconnect(&self, id: ConnectionId) {
        let mut state = self.state.lock().expect("hub poisoned");
        let Some(conn) = state.connections.remove(&id) else {
            return;
        };
        state.channels.retain(|_, subs| {
            subs.remove(&id);
            !subs.is_empty()
        });
        let mut went_offline = false;
        if let Some(m) = state.presence.get_mut(&conn.space) {
            if let Some(n) = m.get_mut(&conn.learner) {
                *n -= 1;
                if *n == 0 {
                    m.remove(&conn.learner);
                    went_offline = true;
                }
            }
        }
        if went_offline {
            let presence = Delivery::Presence(PresenceState {
                space: conn.space.clone(),
                online: state.online(&conn.space),
            });
            state.broadcast(&conn.space, &presence);
        }
    }

    /// Subscribes to a topic in the connection's space. `self_delivery`
    /// controls whether the connection receives its own publications.
    pub fn subscribe(&self, id: ConnectionId, topic: &str, self_delivery: bool) -> Result<(), HubError> {
        if topic.is_empty() {
            return Err(HubError::EmptyTopic);
        }
        let mut state = self.state.lock().expect("hub poisoned");
        let space = state
            .connections
            .get(&id)
            .ok_or(HubError::ConnectionClosed(id))?
            .space
            .clone();
        state
            .channels
            .entry((space, topic.to_string()))
            .or_default()
            .insert(id, self_delivery);
        Ok(())
    }

    pub fn unsubscribe(&self, id: ConnectionId, topic: &str) -> Result<(), HubError> {
        let mut state = self.state.lock().expect("hub poisoned");
        let space = state
            .connections
            .get(&id)
            .ok_or(HubError::ConnectionClosed(id))?
            .space
            .clone();
        let key = (space, topic.to_string());
        if let Some(subs) = state.channels.get_mut(&key) {
            subs.remove(&id);
            if subs.is_empty() {
                state.channels.remove(&key);
            }
        }
        Ok(())
    }

    /// Publishes a payload to every subscriber of the topic in the
    /// publisher's space. Returns the assigned sequence number.
    pub fn publish(&self, id: ConnectionId, topic: &str, payload: Value) -> Result<u64, HubError> {
        if topic.is_empty() {
            return Err(HubError::EmptyTopic);
        }
        let mut state = self.state.lock().expect("hub poisoned");
        let conn = state
            .connections
            .get_mut(&id)
            .ok_or(HubError::ConnectionClosed(id))?;
        let seq = conn.seqs.entry(topic.to_string()).or_insert(0);
        *seq += 1;
        let seq = *seq;
        let space = conn.space.clone();
        let learner = conn.learner.clone();
        let event = self.log.record(
            NewEvent::new(learner, Verb::IwcPublish, "topic", topic)
                .in_space(&space)
                .with_details(json!({ "connection": id, "seq": seq })),
        )?;
        let message = Delivery::Iwc(IwcMessage {
            publisher: id,
            space: space.clone(),
            topic: topic.to_string(),
            seq,
            payload,
            ts: event.ts,
        });
        if let Some(subs) = state.channels.get(&(space, topic.to_string())) {
            for (&sub, &self_delivery) in subs {
                if sub == id && !self_delivery {
                    continue;
                }
                if let Some(c) = state.connections.get(&sub) {
                    let _ = c.tx.send(message.clone());
                }
            }
        }
        Ok(seq)
    }

    /// Posts a chat message to every connection of the space and records it
    /// in the event log, which is the durable chat history.
    pub fn chat_post(&self, id: ConnectionId, text: &str) -> Result<ChatMessage, HubError> {
        if text.trim().is_empty() {
            return Err(HubError::EmptyMessage);
        }
        let state = self.state.lock().expect("hub poisoned");
        let conn = state
            .connections
            .get(&id)
            .ok_or(HubError::ConnectionClosed(id))?;
        let event = self.log.record(
            NewEvent::new(&conn.learner, Verb::ChatPost, "chat", id.to_string())
                .in_space(&conn.space)
                .with_details(json!({ "text": text })),
        )?;
        let message = ChatMessage {
            space: conn.space.clone(),
            author: conn.learner.clone(),
            text: text.to_string(),
            ts: event.ts,
        };
        state.broadcast(&conn.space, &Delivery::Chat(message.clone()));
        Ok(message)
    }

    /// The last `limit` chat messages of a space, oldest first.
    pub fn chat_history(&self, space: &str, limit: usize) -> Vec<ChatMessage> {
        let posts = self
            .log
            .filtered(|e| e.verb == Verb::ChatPost && e.space.as_deref() == Some(space));
        let skip = posts.len().saturating_sub(limit);
        posts
            .into_iter()
            .skip(skip)
            .map(|e| ChatMessage {
                space: space.to_string(),
                author: e.actor.clone(),
                text: e.detail_str("text").unwrap_or_default().to_string(),
                ts: e.ts,
            })
            .collect()
    }

    /// Learners with at least one open connection who are still members.
    pub fn presence(&self, space: &str) -> PresenceState {
        let online = self.state.lock().expect("hub poisoned").online(space);
        let members: HashSet<String> = self
            .spaces
            .get(space)
            .map(|s| s.member_ids().into_iter().collect())
            .unwrap_or_default();
        PresenceState {
            space: space.to_string(),
            online: online.into_iter().filter(|l| members.contains(l)).collect(),
        }
    }

    pub fn connection_count(&self) -> usize {
        self.state.lock().expect("hub poisoned").connections.len()
    }

    /// Handles one client frame. `pub` frames return the assigned sequence
    /// number; `chat` frames carry `{"text": ...}` as payload.
    pub fn handle_frame(&self, id: ConnectionId, frame: Frame) -> Result<Option<u64>, HubError> {
        let topic = || {
            frame
                .topic
                .clone()
                .ok_or_else(|| HubError::MalformedFrame("missing topic".into()))
        };
        match frame.kind {
            FrameKind::Sub => {
                let self_delivery = frame
                    .payload
                    .as_ref()
                    .and_then(|p| p.get("self"))
                    .and_then(Value::as_bool)
                    .unwrap_or(false);
                self.subscribe(id, &topic()?, self_delivery)?;
                Ok(None)
            }
            FrameKind::Unsub => {
                self.unsubscribe(id, &topic()?)?;
                Ok(None)
            }
            FrameKind::Pub => {
                let payload = frame.payload.clone().unwrap_or(Value::Null);
                Ok(Some(self.publish(id, &topic()?, payload)?))
            }
            FrameKind::Chat => {
                let text = frame
                    .payload
                    .as_ref()
                    .and_then(|p| p.get("text"))
                    .and_then(Value::as_str)
                    .unwrap_or_default();
                self.chat_post(id, text)?;
                Ok(None)
            }
            FrameKind::Presence => Err(HubError::MalformedFrame(
                "presence frames are server-sent".into(),
            )),
        }
    }
}

/// Client-side filter for at-least-once delivery: drops frames whose
/// (publisher, topic, seq) has been seen.
#[derive(Debug, Default)]
pub struct Deduper {
    seen: HashSet<(ConnectionId, String, u64)>,
}

impl Deduper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true the first time a message is offered.
    pub fn accept(&mut self, message: &IwcMessage) -> bool {
        self.seen
            .insert((message.publisher, message.topic.clone(), message.seq))
    }
}
