// Inter-widget communication inside one space: two learners' widgets
// subscribe to a topic, publish, chat, and watch presence change. The
// deliveries are printed as the wire frames the `/rt` channel sends.

use std::sync::Arc;

use ple_core::realtime::Inbox;
use ple_core::{Catalog, EventLog, Frame, Hub, SpaceService, SystemClock};
use serde_json::json;

fn drain(who: &str, inbox: &mut Inbox) {
    while let Ok(delivery) = inbox.try_recv() {
        println!("  {who} <- {}", delivery.to_frame().to_json());
    }
}

pub fn main() {
    let log = Arc::new(EventLog::in_memory(Arc::new(SystemClock)));
    let spaces = Arc::new(SpaceService::new(Arc::new(Catalog::default_catalog()), log.clone()));
    spaces.create_space("algebra", "eva").unwrap();
    spaces.join_space("algebra", "max").unwrap();
    let hub = Hub::new(spaces, log.clone());

    let (eva, mut eva_in) = hub.connect("eva", "algebra").unwrap();
    let (max, mut max_in) = hub.connect("max", "algebra").unwrap();
    println!("presence after two connections:");
    drain("eva", &mut eva_in);
    drain("max", &mut max_in);

    hub.handle_frame(max, Frame::parse(r#"{"kind":"sub","topic":"plot.point"}"#).unwrap()).unwrap();
    for x in 0..3 {
        let seq = hub.publish(eva, "plot.point", json!({ "x": x, "y": x * x })).unwrap();
        println!("eva published seq {seq}");
    }
    hub.chat_post(max, "the parabola opens upwards").unwrap();
    println!("deliveries:");
    drain("eva", &mut eva_in);
    drain("max", &mut max_in);

    match hub.connect("ida", "algebra") {
        Err(e) => println!("ida rejected: {e}"),
        Ok(_) => unreachable!("ida is not a member"),
    }

    hub.disconnect(eva);
    drain("max", &mut max_in);
    println!("online now: {:?}; chat history {} message(s); {} events logged",
        hub.presence("algebra").online,
        hub.chat_history("algebra", 10).len(),
        log.len());
}
