#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use abm_serve::protocol::{CreateSession, SessionCreated};
use abm_serve::{router, AppState, ServerConfig, SCHEMA};
use futures::{SinkExt, StreamExt};
use jsonschema::Validator;
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

/// Validator for one `$defs` entry of the protocol schema.
pub fn validator(def: &str) -> Validator {
    let root: Value = serde_json::from_str(SCHEMA).unwrap();
    let schema = json!({ "$defs": root["$defs"], "$ref": format!("#/$defs/{def}") });
    jsonschema::validator_for(&schema).unwrap()
}

pub fn assert_valid(v: &Validator, msg: &Value) {
    if let Err(e) = v.validate(msg) {
        panic!("schema violation: {e}\n{msg}");
    }
}

pub struct Server {
    pub addr: SocketAddr,
    pub state: AppState,
}

pub async fn start(config: ServerConfig) -> Server {
    let state = AppState::new(config);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server { addr, state }
}

impl Server {
    pub fn session(&self, model: &str, config: Value, seed: u64) -> SessionCreated {
        let req = CreateSession { model: model.into(), config: serde_json::from_value(config).unwrap(), seed: Some(seed) };
        self.state.create_session(&req).map_err(|(_, e)| e).unwrap()
    }

    pub async fn connect(&self, id: &str) -> Client {
        let url = format!("ws://{}/sessions/{id}", self.addr);
        let (ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
        Client { ws, inbound: validator("server_message"), outbound: validator("client_message"), log: Vec::new() }
    }
}

/// A WebSocket client that checks every frame in both directions against
/// the schema.
pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    inbound: Validator,
    outbound: Validator,
    /// Every message received so far.
    pub log: Vec<Value>,
}

impl Client {
    pub async fn send(&mut self, msg: Value) {
        assert_valid(&self.outbound, &msg);
        self.send_raw(msg.to_string()).await;
    }

    pub async fn send_raw(&mut self, text: String) {
        self.ws.send(Message::Text(text.into())).await.unwrap();
    }

    /// Next message, or `None` after `wait` of silence.
    pub async fn recv_within(&mut self, wait: Duration) -> Option<Value> {
        loop {
            let frame = tokio::time::timeout(wait, self.ws.next()).await.ok()??.unwrap();
            if let Message::Text(t) = frame {
                let v: Value = serde_json::from_str(&t).unwrap();
                assert_valid(&self.inbound, &v);
                self.log.push(v.clone());
                return Some(v);
            }
        }
    }

    pub async fn recv(&mut self) -> Value {
        self.recv_within(Duration::from_secs(10)).await.expect("server went quiet")
    }

    /// Receives until `done` holds for a message, returning everything up
    /// to and including it.
    pub async fn until(&mut self, done: impl Fn(&Value) -> bool) -> Vec<Value> {
        let mut out = Vec::new();
        loop {
            let m = self.recv().await;
            let stop = done(&m);
            out.push(m);
            if stop {
                return out;
            }
        }
    }

    /// Sends `msg` and collects everything up to its answer.
    pub async fn request(&mut self, msg: Value) -> Vec<Value> {
        let kind = msg["type"].as_str().unwrap().to_string();
        self.send(msg).await;
        self.until(move |m| answers(m, &kind)).await
    }

    /// Reads until `quiet` passes with nothing arriving.
    pub async fn drain(&mut self, quiet: Duration) -> Vec<Value> {
        let mut out = Vec::new();
        while let Some(m) = self.recv_within(quiet).await {
            out.push(m);
        }
        out
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}

pub fn answers(m: &Value, kind: &str) -> bool {
    match m["type"].as_str() {
        Some("ack") | Some("error") => m["of"] == kind,
        Some("param_ack") => kind == "set_param",
        _ => false,
    }
}

pub fn of_type<'a>(msgs: &'a [Value], ty: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    msgs.iter().filter(move |m| m["type"] == ty)
}

/// `(label, step, value)` of every series message.
pub fn series(msgs: &[Value]) -> Vec<(String, u64, f64)> {
    of_type(msgs, "series")
        .map(|m| (m["label"].as_str().unwrap().to_string(), m["step"].as_u64().unwrap(), m["value"].as_f64().unwrap()))
        .collect()
}

pub fn last_snapshot(msgs: &[Value]) -> Option<&Value> {
    of_type(msgs, "snapshot").last()
}
