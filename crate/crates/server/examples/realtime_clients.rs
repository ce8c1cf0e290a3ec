// Two browser tabs in one space talking over the /rt frame channel of a live
// server: subscribe, publish with acknowledgements, chat, and the close code
// a malformed frame earns.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use ple_server::{serve, AppState};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<tokio::net::TcpStream>>;

async fn send(ws: &mut Socket, frame: Value) {
    ws.send(Message::text(frame.to_string())).await.unwrap();
}

async fn show(who: &str, ws: &mut Socket, frames: usize) {
    for _ in 0..frames {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        match msg {
            Message::Text(t) => println!("{who} <- {t}"),
            Message::Close(Some(c)) => println!("{who} <- close {} {}", u16::from(c.code), c.reason),
            other => println!("{who} <- {other:?}"),
        }
    }
}

async fn session() {
    let state = AppState::in_memory();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state.clone(), None));

    state.platform.spaces.create_space("algebra", "eva").unwrap();
    state.platform.spaces.join_space("algebra", "max").unwrap();
    let url = |learner: &str| format!("ws://{addr}/rt?space=algebra&token={}", state.sessions.issue(learner));

    let (mut eva, _) = connect_async(url("eva")).await.unwrap();
    show("eva", &mut eva, 1).await;
    let (mut max, _) = connect_async(url("max")).await.unwrap();
    show("eva", &mut eva, 1).await;
    show("max", &mut max, 1).await;

    send(&mut max, json!({ "kind": "sub", "topic": "plot.point" })).await;
    send(&mut max, json!({ "kind": "pub", "topic": "ready" })).await;
    show("max", &mut max, 1).await;
    for x in 1..=2 {
        send(&mut eva, json!({ "kind": "pub", "topic": "plot.point", "payload": { "x": x, "y": x * x } })).await;
    }
    show("eva", &mut eva, 2).await;
    show("max", &mut max, 2).await;

    send(&mut eva, json!({ "kind": "chat", "payload": { "text": "see the vertex?" } })).await;
    show("max", &mut max, 1).await;
    show("eva", &mut eva, 1).await;

    eva.send(Message::text("{not json")).await.unwrap();
    show("eva", &mut eva, 1).await;
    show("max", &mut max, 1).await;
}

pub fn main() {
    tokio::runtime::Runtime::new().unwrap().block_on(session());
}
