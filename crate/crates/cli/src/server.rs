//! WebSocket front end for [`SessionManager`]: one JSON message in, one
//! JSON message out.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use lumi_core::session::SessionManager;
use tokio::net::TcpListener;

type Shared = Arc<Mutex<SessionManager>>;

pub fn router() -> Router {
    let state: Shared = Arc::new(Mutex::new(SessionManager::new()));
    Router::new()
        .route("/", get(|| async { "lumi session server: connect a WebSocket to /ws\n" }))
        .route("/ws", get(upgrade))
        .with_state(state)
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(mut socket: WebSocket, state: Shared) {
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => state
                .lock()
                .expect("session lock poisoned")
                .handle_text(text.as_str()),
            Message::Close(_) => break,
            _ => continue,
        };
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}

/// Serves on an already bound listener until the task is dropped.
pub async fn serve_on(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

pub async fn serve(port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on ws://{addr}/ws");
    eprintln!("listening on ws://{addr}/ws");
    serve_on(listener).await
}
