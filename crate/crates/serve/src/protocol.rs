//! JSON messages exchanged over HTTP and the session WebSocket.
//!
//! Every message is an object with a `type` field. The shapes are pinned by
//! `schema/protocol.json`.

use abm::Value;
use abm_models::{Entry, ParamRange, ParamSpec, Snapshot};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

/// Sent by the browser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Replaces the session's model with a new one.
    Create {
        model: String,
        #[serde(default)]
        config: Map<String, Json>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Step {
        #[serde(default = "one")]
        n: u64,
    },
    Play {
        sps: f64,
    },
    Pause,
    SetParam {
        name: String,
        value: Json,
    },
    Reset,
    Subscribe,
    ClearSeries,
}

fn one() -> u64 {
    1
}

impl ClientMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ClientMessage::Create { .. } => "create",
            ClientMessage::Step { .. } => "step",
            ClientMessage::Play { .. } => "play",
            ClientMessage::Pause => "pause",
            ClientMessage::SetParam { .. } => "set_param",
            ClientMessage::Reset => "reset",
            ClientMessage::Subscribe => "subscribe",
            ClientMessage::ClearSeries => "clear_series",
        }
    }
}

/// When a parameter change becomes visible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applies {
    NextStep,
    OnReset,
}

/// Sent by the server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Describes the model a connection is looking at.
    Session {
        id: String,
        model: String,
        seed: u64,
        params: Vec<ParamView>,
        /// Current parameter values.
        values: Map<String, Json>,
        series: Vec<String>,
        step: u64,
        series_step: u64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        playing: Option<f64>,
    },
    Snapshot(Snapshot),
    Series {
        label: String,
        /// Position on the session's series axis, which keeps counting
        /// across resets.
        step: u64,
        value: Option<f64>,
    },
    ResetMarker {
        step: u64,
    },
    ParamAck {
        name: String,
        value: Json,
        applies: Applies,
    },
    Ack {
        of: String,
    },
    Error {
        code: String,
        message: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        of: Option<String>,
    },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>, of: Option<&str>) -> Self {
        ServerMessage::Error { code: code.into(), message: message.into(), of: of.map(Into::into) }
    }

    pub fn ack(of: &str) -> Self {
        ServerMessage::Ack { of: of.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RangeView {
    Values { values: Vec<Json> },
    Interval { min: f64, max: f64, step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamView {
    pub name: String,
    pub default: Json,
    pub range: RangeView,
    pub live: bool,
    pub description: String,
}

impl From<&ParamSpec> for ParamView {
    fn from(p: &ParamSpec) -> Self {
        let range = match &p.range {
            ParamRange::Values { values } => RangeView::Values { values: values.iter().map(to_json).collect() },
            ParamRange::Interval { min, max, step } => RangeView::Interval { min: *min, max: *max, step: *step },
        };
        ParamView {
            name: p.name.clone(),
            default: to_json(&p.default),
            range,
            live: p.live,
            description: p.description.clone(),
        }
    }
}

/// Entry of `GET /models`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamView>,
    pub series: Vec<String>,
    pub agent_collectors: Vec<String>,
    pub model_collectors: Vec<String>,
    pub objectives: Vec<String>,
}

impl From<&Entry> for ModelInfo {
    fn from(e: &Entry) -> Self {
        let strings = |v: Vec<&'static str>| v.into_iter().map(String::from).collect();
        ModelInfo {
            name: e.name.into(),
            description: e.description.into(),
            params: (e.params)().iter().map(ParamView::from).collect(),
            series: strings((e.series)()),
            agent_collectors: (e.agent_collectors)(),
            model_collectors: (e.model_collectors)(),
            objectives: strings((e.objectives)()),
        }
    }
}

/// Body of `POST /sessions`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub model: String,
    #[serde(default)]
    pub config: Map<String, Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub model: String,
    pub seed: u64,
    /// Path of the session WebSocket.
    pub socket: String,
}

/// Body of every non-2xx HTTP response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpError {
    pub code: String,
    pub message: String,
}

pub fn to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Real(x) => serde_json::Number::from_f64(*x).map_or(Json::Null, Json::Number),
        Value::Bool(b) => Json::Bool(*b),
        Value::Str(s) => Json::String(s.clone()),
    }
}

/// `None` for null, arrays and objects.
pub fn from_json(v: &Json) -> Option<Value> {
    match v {
        Json::Number(n) => n.as_i64().map(Value::Int).or_else(|| n.as_f64().map(Value::Real)),
        Json::Bool(b) => Some(Value::Bool(*b)),
        Json::String(s) => Some(Value::Str(s.clone())),
        _ => None,
    }
}

pub fn config_overrides(config: &Map<String, Json>) -> Result<Vec<(String, Value)>, (String, String)> {
    config
        .iter()
        .map(|(k, v)| {
            from_json(v)
                .map(|v| (k.clone(), v))
                .ok_or_else(|| ("param_wrong_type".to_string(), format!("parameter `{k}` must be a number, string or boolean")))
        })
        .collect()
}
