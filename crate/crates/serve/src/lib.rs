//! HTTP and WebSocket server for exploring the reference models live.
//!
//! Routes:
//! - `GET /models` lists models with parameter ranges and series labels.
//! - `POST /sessions` builds a model and returns the session id.
//! - `GET /sessions/{id}` upgrades to the session WebSocket.
//! - `GET /schema` returns the JSON schema of all messages.

pub mod protocol;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket};
use axum::extract::{Path, State, WebSocketUpgrade};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, watch};

use protocol::{config_overrides, ClientMessage, CreateSession, HttpError, ModelInfo, SessionCreated};
use session::{Command, Connection, Session};

/// The protocol schema, also served at `GET /schema`.
pub const SCHEMA: &str = include_str!("../schema/protocol.json");

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// How long a session survives without a connection.
    pub grace: Duration,
    pub max_sps: f64,
    /// Largest `n` accepted by a single `step` message.
    pub max_step: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { grace: Duration::from_secs(60), max_sps: 1000.0, max_step: 100_000 }
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<Command>>>,
    config: ServerConfig,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState { inner: Arc::new(Inner { sessions: Mutex::default(), config, counter: AtomicU64::new(0) }) }
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().unwrap().len()
    }

    fn next(&self) -> u64 {
        self.inner.counter.fetch_add(1, Ordering::Relaxed)
    }

    fn fresh_seed(&self) -> u64 {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        abm::rng::mix64(nanos ^ self.next()) >> 1
    }

    /// Builds the model and starts its session task.
    pub fn create_session(&self, req: &CreateSession) -> Result<SessionCreated, (StatusCode, HttpError)> {
        let bad = |status, code: &str, message: String| (status, HttpError { code: code.into(), message });
        let entry = abm_models::find(&req.model).ok_or_else(|| {
            let names = abm_models::registry::names().join(", ");
            bad(StatusCode::NOT_FOUND, "unknown_model", format!("unknown model `{}` (available: {names})", req.model))
        })?;
        let overrides = config_overrides(&req.config).map_err(|(c, m)| bad(StatusCode::BAD_REQUEST, &c, m))?;
        let seed = req.seed.unwrap_or_else(|| self.fresh_seed());
        let sim = entry
            .build(&overrides, seed)
            .map_err(|e| bad(StatusCode::BAD_REQUEST, e.code(), e.to_string()))?;
        let id = format!("{:016x}", abm::rng::mix64(self.fresh_seed() ^ self.next()));
        let (tx, rx) = mpsc::unbounded_channel();
        self.inner.sessions.lock().unwrap().insert(id.clone(), tx);
        let session = Session::new(id.clone(), entry, sim, seed, self.inner.config.clone());
        let state = self.clone();
        let sid = id.clone();
        tokio::spawn(async move {
            session.run(rx).await;
            state.inner.sessions.lock().unwrap().remove(&sid);
        });
        Ok(SessionCreated { socket: format!("/sessions/{id}"), id, model: entry.name.into(), seed })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/schema", get(schema))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(open_socket))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}

async fn list_models() -> Json<Vec<ModelInfo>> {
    Json(abm_models::models().iter().map(ModelInfo::from).collect())
}

async fn schema() -> Response {
    ([(axum::http::header::CONTENT_TYPE, "application/schema+json")], SCHEMA).into_response()
}

async fn create_session(State(state): State<AppState>, Json(req): Json<CreateSession>) -> Response {
    match state.create_session(&req) {
        Ok(created) => (StatusCode::CREATED, Json(created)).into_response(),
        Err((status, err)) => (status, Json(err)).into_response(),
    }
}

async fn open_socket(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    let Some(tx) = state.inner.sessions.lock().unwrap().get(&id).cloned() else {
        let err = HttpError { code: "unknown_session".into(), message: format!("no session `{id}`") };
        return (StatusCode::NOT_FOUND, Json(err)).into_response();
    };
    let conn_id = state.next();
    ws.on_upgrade(move |socket| connection(socket, tx, conn_id))
}

async fn connection(socket: WebSocket, session: mpsc::UnboundedSender<Command>, id: u64) {
    let (events_tx, mut events) = mpsc::unbounded_channel();
    let (snap_tx, mut snapshots) = watch::channel(None);
    if session.send(Command::Attach(Connection { id, events: events_tx, snapshots: snap_tx })).is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    let writer = async move {
        loop {
            let msg = tokio::select! {
                biased;
                ev = events.recv() => match ev {
                    Some(m) => m,
                    None => break,
                },
                changed = snapshots.changed() => {
                    if changed.is_err() {
                        break;
                    }
                    let Some(snap) = snapshots.borrow_and_update().clone() else { continue };
                    protocol::ServerMessage::Snapshot((*snap).clone())
                }
            };
            let text = serde_json::to_string(&msg).expect("server messages serialize");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    };
    let reader = {
        let session = session.clone();
        async move {
            while let Some(Ok(frame)) = stream.next().await {
                let parsed = match frame {
                    Message::Text(t) => serde_json::from_str::<ClientMessage>(&t).map_err(|e| e.to_string()),
                    Message::Binary(_) => Err("binary frames are not supported".into()),
                    Message::Close(_) => break,
                    _ => continue,
                };
                if session.send(Command::Client(id, parsed)).is_err() {
                    break;
                }
            }
        }
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    let _ = session.send(Command::Detach(id));
}
