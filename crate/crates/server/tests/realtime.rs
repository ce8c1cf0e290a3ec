use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use ple_server::{serve, AppState};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start() -> (SocketAddr, AppState) {
    let state = AppState::in_memory();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state.clone(), None));
    (addr, state)
}

fn member(state: &AppState, space: &str, learners: &[&str]) -> Vec<String> {
    let owner = learners[0];
    state.platform.spaces.create_space(space, owner).unwrap();
    for l in &learners[1..] {
        state.platform.spaces.join_space(space, l).unwrap();
    }
    learners.iter().map(|l| state.sessions.issue(l)).collect()
}

async fn open(addr: SocketAddr, space: &str, token: &str) -> Socket {
    let (ws, _) = connect_async(format!("ws://{addr}/rt?space={space}&token={token}")).await.unwrap();
    ws
}

async fn send(ws: &mut Socket, frame: Value) {
    ws.send(Message::text(frame.to_string())).await.unwrap();
}

/// Next text frame, skipping presence updates unless asked for.
async fn next(ws: &mut Socket, presence: bool) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("frame within 5s")
            .expect("socket open")
            .unwrap();
        if let Message::Text(t) = msg {
            let v: Value = serde_json::from_str(&t).unwrap();
            if presence || v["kind"] != "presence" {
                return v;
            }
        }
    }
}

async fn close_code(ws: &mut Socket) -> u16 {
    loop {
        match tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("close within 5s") {
            Some(Ok(Message::Close(Some(frame)))) => return frame.code.into(),
            Some(Ok(_)) => continue,
            other => panic!("expected a close frame, got {other:?}"),
        }
    }
}

#[tokio::test]
async fn publish_reaches_subscribers_in_order() {
    let (addr, state) = start().await;
    let tokens = member(&state, "room", &["alice", "bob"]);
    let mut a = open(addr, "room", &tokens[0]).await;
    let mut b = open(addr, "room", &tokens[1]).await;
    send(&mut b, json!({ "kind": "sub", "topic": "plot" })).await;
    // The ack of a publish from b proves the subscription was handled.
    send(&mut b, json!({ "kind": "pub", "topic": "sync", "payload": 0 })).await;
    assert_eq!(next(&mut b, false).await, json!({ "kind": "pub", "topic": "sync", "seq": 1 }));

    for i in 1..=20u64 {
        send(&mut a, json!({ "kind": "pub", "topic": "plot", "payload": { "i": i } })).await;
        let ack = next(&mut a, false).await;
        assert_eq!(ack["seq"], i);
    }
    for i in 1..=20u64 {
        let f = next(&mut b, false).await;
        assert_eq!(f["kind"], "pub");
        assert_eq!(f["topic"], "plot");
        assert_eq!(f["seq"], i);
        assert_eq!(f["payload"]["i"], i);
        assert!(f["from"].is_u64());
    }
}

#[tokio::test]
async fn chat_and_presence() {
    let (addr, state) = start().await;
    let tokens = member(&state, "room", &["alice", "bob"]);
    let mut a = open(addr, "room", &tokens[0]).await;
    let first = next(&mut a, true).await;
    assert_eq!(first, json!({ "kind": "presence", "payload": { "online": ["alice"] } }));

    let mut b = open(addr, "room", &tokens[1]).await;
    assert_eq!(next(&mut a, true).await["payload"]["online"], json!(["alice", "bob"]));

    send(&mut b, json!({ "kind": "chat", "payload": { "text": "hello" } })).await;
    let chat = next(&mut a, false).await;
    assert_eq!(chat["kind"], "chat");
    assert_eq!(chat["payload"]["author"], "bob");
    assert_eq!(chat["payload"]["text"], "hello");
    assert_eq!(state.platform.hub.chat_history("room", 10).len(), 1);

    b.close(None).await.unwrap();
    assert_eq!(next(&mut a, true).await["payload"]["online"], json!(["alice"]));
}

#[tokio::test]
async fn rejected_connections() {
    let (addr, state) = start().await;
    member(&state, "room", &["alice"]);
    let outsider = state.sessions.issue("mallory");
    let status = |e: tokio_tungstenite::tungstenite::Error| match e {
        tokio_tungstenite::tungstenite::Error::Http(r) => r.status().as_u16(),
        other => panic!("unexpected {other:?}"),
    };
    let err = connect_async(format!("ws://{addr}/rt?space=room&token=forged")).await.unwrap_err();
    assert_eq!(status(err), 401);
    let err = connect_async(format!("ws://{addr}/rt?space=room&token={outsider}")).await.unwrap_err();
    assert_eq!(status(err), 403);
    let err = connect_async(format!("ws://{addr}/rt?space=nowhere&token={outsider}")).await.unwrap_err();
    assert_eq!(status(err), 404);
}

#[tokio::test]
async fn malformed_frames_close_the_socket() {
    let (addr, state) = start().await;
    let tokens = member(&state, "room", &["alice"]);

    let mut ws = open(addr, "room", &tokens[0]).await;
    ws.send(Message::text("{not json")).await.unwrap();
    assert_eq!(close_code(&mut ws).await, 1007);

    let mut ws = open(addr, "room", &tokens[0]).await;
    send(&mut ws, json!({ "kind": "pub" })).await;
    assert_eq!(close_code(&mut ws).await, 1008);

    let mut ws = open(addr, "room", &tokens[0]).await;
    send(&mut ws, json!({ "kind": "presence" })).await;
    assert_eq!(close_code(&mut ws).await, 1008);

    tokio::time::sleep(Duration::from_millis(100)).await;
    assert_eq!(state.platform.hub.connection_count(), 0);
}

#[tokio::test]
async fn spaces_are_isolated() {
    let (addr, state) = start().await;
    let t1 = member(&state, "one", &["alice"]);
    let t2 = member(&state, "two", &["bob"]);
    let mut a = open(addr, "one", &t1[0]).await;
    let mut b = open(addr, "two", &t2[0]).await;
    send(&mut b, json!({ "kind": "sub", "topic": "t" })).await;
    send(&mut a, json!({ "kind": "pub", "topic": "t", "payload": 1 })).await;
    assert_eq!(next(&mut a, false).await["seq"], 1);
    send(&mut b, json!({ "kind": "pub", "topic": "t", "payload": 2 })).await;
    // b only sees its own ack; a's message never crosses spaces.
    assert_eq!(next(&mut b, false).await, json!({ "kind": "pub", "topic": "t", "seq": 1 }));
}
