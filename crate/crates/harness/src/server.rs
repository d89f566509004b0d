//! Live session over HTTP and WebSocket.
//!
//! The executive runs on its own thread, one simulated second per
//! `tick_ms` of wall time. Each published frame goes to every WebSocket
//! client and is what `GET /frame` returns. Text messages from clients are
//! parsed by the gateway and queued on the executive inbox; the reply is an
//! `ack` or `error` object.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde::Serialize;
use tokio::sync::watch;

use arn_core::executive::{Executive, InboxHandle, LoopOutcome, TrialError, TrialOutput};
use arn_core::gateway;
use arn_core::world::WorldMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServeOptions {
    /// Wall-clock milliseconds per simulated second.
    pub tick_ms: u64,
    /// Publish every k-th tick (the final frame is always published).
    pub every: u64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            tick_ms: 100,
            every: 1,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub inbox: InboxHandle,
    pub map: Arc<WorldMap>,
    pub frames: watch::Receiver<Arc<str>>,
}

/// Handle on the stepping thread.
pub struct Session {
    pub state: AppState,
    stop: Arc<AtomicBool>,
    thread: JoinHandle<Result<TrialOutput, TrialError>>,
}

impl Session {
    /// Starts stepping `exec` in the background. The initial frame is
    /// published before this returns.
    pub fn start(mut exec: Executive, opts: ServeOptions) -> Self {
        let every = opts.every.max(1);
        let (tx, frames) = watch::channel::<Arc<str>>(exec.frame().to_json().into());
        let state = AppState {
            inbox: exec.inbox(),
            map: Arc::clone(&exec.sim().map),
            frames,
        };
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || {
            while !flag.load(Ordering::SeqCst) {
                std::thread::sleep(Duration::from_millis(opts.tick_ms));
                let outcome = exec.step()?;
                let running = outcome == LoopOutcome::Running;
                if !running || exec.now().is_multiple_of(every) {
                    tx.send_replace(exec.frame().to_json().into());
                }
                if !running {
                    break;
                }
            }
            Ok(exec.into_output())
        });
        Self {
            state,
            stop,
            thread,
        }
    }

    pub fn router(&self) -> Router {
        router(self.state.clone())
    }

    /// Stops stepping and returns what ran so far.
    pub fn finish(self) -> Result<TrialOutput, TrialError> {
        self.stop.store(true, Ordering::SeqCst);
        self.thread.join().expect("executive thread panicked")
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/frame", get(latest_frame))
        .route("/map", get(map_json))
        .route("/ws", get(upgrade))
        .with_state(state)
}

fn json(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn latest_frame(State(st): State<AppState>) -> Response {
    let frame = st.frames.borrow().clone();
    json(frame.to_string())
}

async fn map_json(State(st): State<AppState>) -> Response {
    json(st.map.to_json())
}

async fn upgrade(ws: WebSocketUpgrade, State(st): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, st))
}

/// Server reply to a client message.
#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Reply {
    Ack { seq: u64, tick: u64 },
    Error { message: String },
}

async fn client(socket: WebSocket, st: AppState) {
    let (mut tx, mut rx) = socket.split();
    let mut frames = st.frames.clone();
    let first = frames.borrow_and_update().clone();
    if tx.send(Message::Text(first.as_ref().into())).await.is_err() {
        return;
    }
    // Frames stop when the run ends; the socket stays open for messages.
    let mut streaming = true;
    loop {
        tokio::select! {
            changed = frames.changed(), if streaming => {
                if changed.is_err() {
                    streaming = false;
                    continue;
                }
                let f = frames.borrow_and_update().clone();
                if tx.send(Message::Text(f.as_ref().into())).await.is_err() {
                    break;
                }
            }
            msg = rx.next() => {
                let text = match msg {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match gateway::submit(&st.inbox, &st.map, text.as_str()) {
                    Ok(ack) => Reply::Ack { seq: ack.seq, tick: ack.tick },
                    Err(e) => Reply::Error { message: e.to_string() },
                };
                let body = serde_json::to_string(&reply).expect("reply serializes");
                if tx.send(Message::Text(body.into())).await.is_err() {
                    break;
                }
            }
        }
    }
}
