use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

async fn exchange<S>(ws: &mut S, msg: Value) -> Value
where
    S: SinkExt<Message> + StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin,
    <S as futures_util::Sink<Message>>::Error: std::fmt::Debug,
{
    ws.send(Message::Text(msg.to_string().into())).await.unwrap();
    loop {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
            _ => continue,
        }
    }
}

#[tokio::test]
async fn websocket_session_round_trip() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(lumi_cli::server::serve_on(listener));
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();

    let created = exchange(
        &mut ws,
        json!({"type": "createSession", "v": 1, "scenario": {
            "algorithm": "Rendezvous", "scheduler": "FSYNC", "movement": {"kind": "Rigid"},
            "initial_lights": ["A", "A"],
            "initial_positions": [{"x": "0", "y": "0"}, {"x": "10", "y": "0"}]
        }}),
    )
    .await;
    assert_eq!(created["type"], "stateUpdate");
    assert_eq!(created["v"], 1);
    let id = created["state"]["sessionId"].as_str().unwrap().to_string();
    let round = created["state"]["enabled"][0].clone();
    assert_eq!(round["kind"], "SyncRound");

    let after = exchange(&mut ws, json!({"type": "chooseEvent", "v": 1, "sessionId": id, "event": round})).await;
    let state = &after["state"];
    assert_eq!(state["verdict"]["status"], "rendezvous");
    assert_eq!(state["robots"][0]["position"]["x"], "5/1");
    assert_eq!(state["robots"][1]["positionDecimal"]["x"], "5");
    assert_eq!(state["distanceSquared"], "0/1");

    let undone = exchange(&mut ws, json!({"type": "undo", "v": 1, "sessionId": id})).await;
    assert_eq!(undone["state"]["distanceSquared"], "100/1");
    let err = exchange(&mut ws, json!({"type": "undo", "v": 1, "sessionId": id})).await;
    assert_eq!(err["type"], "error");
    let bad = exchange(&mut ws, json!({"type": "chooseEvent", "v": 1, "sessionId": id,
        "event": {"kind": "Look", "robot": "r"}})).await;
    assert_eq!(bad["type"], "error");
    assert!(bad["message"].as_str().unwrap().contains("FSYNC"), "{bad}");
}
