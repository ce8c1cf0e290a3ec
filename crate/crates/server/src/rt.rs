//! The `/rt` frame channel: one WebSocket per widget client, scoped to a
//! space.
//!
//! Connect with `GET /rt?space=NAME&token=TOKEN`. Each text message is one
//! JSON frame `{kind, topic?, payload?, seq?, from?}`. A `pub` frame is
//! acknowledged with `{"kind":"pub","topic":T,"seq":N}`. A frame that is not
//! valid JSON closes the socket with code 1007; one the hub rejects closes
//! it with code 1008.

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use futures_util::{SinkExt, StreamExt};
use ple_core::realtime::{ConnectionId, FrameKind, Inbox};
use ple_core::{Frame, Hub};
use serde::Deserialize;
use std::sync::Arc;
use tokio::sync::mpsc;

use crate::error::ApiError;
use crate::AppState;

pub const CLOSE_INVALID_PAYLOAD: u16 = 1007;
pub const CLOSE_POLICY: u16 = 1008;

#[derive(Deserialize)]
pub struct RtParams {
    space: String,
    token: String,
}

pub async fn upgrade(
    State(s): State<AppState>,
    Query(params): Query<RtParams>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let learner = s.sessions.learner(&params.token).ok_or_else(ApiError::unauthorized)?;
    if !s.platform.spaces.is_member(&params.space, &learner)? {
        return Err(ApiError::forbidden(format!("`{learner}` is not a member of `{}`", params.space)));
    }
    let hub = s.platform.hub.clone();
    Ok(ws.on_upgrade(move |mut socket| async move {
        match hub.connect(&learner, &params.space) {
            Ok((id, inbox)) => session(socket, hub, id, inbox).await,
            Err(e) => {
                let _ = socket.send(close(CLOSE_POLICY, e.to_string())).await;
            }
        }
    }))
}

fn close(code: u16, reason: String) -> Message {
    Message::Close(Some(CloseFrame {
        code,
        reason: reason.into(),
    }))
}

async fn session(socket: WebSocket, hub: Arc<Hub>, id: ConnectionId, mut inbox: Inbox) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        loop {
            let message = tokio::select! {
                biased;
                m = out_rx.recv() => match m {
                    Some(m) => m,
                    None => break,
                },
                d = inbox.recv() => match d {
                    Some(d) => Message::Text(d.to_frame().to_json().into()),
                    None => break,
                },
            };
            let closing = matches!(message, Message::Close(_));
            if sink.send(message).await.is_err() || closing {
                break;
            }
        }
    });

    while let Some(Ok(message)) = stream.next().await {
        let text = match message {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let frame = match Frame::parse(&text) {
            Ok(f) => f,
            Err(e) => {
                let _ = out_tx.send(close(CLOSE_INVALID_PAYLOAD, e.to_string()));
                break;
            }
        };
        let topic = frame.topic.clone();
        match hub.handle_frame(id, frame) {
            Ok(Some(seq)) => {
                let ack = Frame {
                    kind: FrameKind::Pub,
                    topic,
                    payload: None,
                    seq: Some(seq),
                    from: None,
                };
                let _ = out_tx.send(Message::Text(ack.to_json().into()));
            }
            Ok(None) => {}
            Err(e) => {
                let _ = out_tx.send(close(CLOSE_POLICY, e.to_string()));
                break;
            }
        }
    }
    hub.disconnect(id);
    drop(out_tx);
    let _ = writer.await;
}
