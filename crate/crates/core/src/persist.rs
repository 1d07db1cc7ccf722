//! Model checkpoints.
//!
//! A checkpoint is a UTF-8 JSON document (extension `.abmck`) with sorted
//! keys, agents in ascending id order and shortest round-trip floats, so
//! saving the same model twice yields identical bytes:
//!
//! ```json
//! {
//!   "agents": [
//!     { "id": 1, "kind": "agent", "pos": [3, 4],
//!       "props": { "group": { "type": "int", "value": 1 } } }
//!   ],
//!   "format_version": 1,
//!   "model": "schelling",
//!   "next_id": 2,
//!   "properties": { "min_to_be_happy": { "type": "int", "value": 3 } },
//!   "rng": [1, 2, 3, 4],
//!   "scheduler": { "kind": "random" },
//!   "space": { "dims": [20, 20], "metric": "chebyshev", "periodic": false },
//!   "state": null,
//!   "step_count": 0
//! }
//! ```
//!
//! Cell occupancy and spatial buckets are rebuilt by re-registering the
//! agents, so only the space configuration (and topology, for graphs) is
//! stored.

use std::collections::BTreeMap;
use std::io;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use crate::agent::{AgentData, AgentId};
use crate::model::{Model, Properties};
use crate::rng::Rng;
use crate::schedule::{Scheduler, SchedulerSpec};
use crate::space::Space;
use crate::value::Value;

pub const FORMAT_VERSION: u64 = 1;
pub const EXTENSION: &str = "abmck";

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("unsupported checkpoint format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: Json },
    #[error("corrupt checkpoint at `{path}`: {message}")]
    CorruptCheckpoint { path: String, message: String },
    #[error("checkpoint uses a {0} scheduler, which must be supplied when loading")]
    SchedulerRequired(String),
    #[error("checkpoint belongs to model `{found}`, expected `{expected}`")]
    WrongModel { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn corrupt(path: impl Into<String>, message: impl ToString) -> PersistError {
    PersistError::CorruptCheckpoint { path: path.into(), message: message.to_string() }
}

fn encode<T: Serialize>(path: &str, v: &T) -> Result<Json, PersistError> {
    serde_json::to_value(v).map_err(|e| corrupt(path, e))
}

/// Canonical JSON tree of the model.
pub fn to_json<A, S, X>(model: &Model<A, S, X>, name: &str) -> Result<Json, PersistError>
where
    A: AgentData,
    S: Space + Serialize,
    S::Pos: Serialize,
    X: Serialize,
{
    let agents = model
        .agents()
        .map(|a| {
            let props: BTreeMap<&str, Value> = a.data.props().into_iter().collect();
            Ok(json!({
                "id": a.id(),
                "kind": a.kind(),
                "pos": encode("agents.pos", a.pos())?,
                "props": encode("agents.props", &props)?,
            }))
        })
        .collect::<Result<Vec<_>, PersistError>>()?;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "model": name,
        "step_count": model.step_count(),
        "next_id": model.next_id(),
        "properties": encode("properties", &model.properties)?,
        "space": encode("space", model.space())?,
        "agents": agents,
        "rng": model.rng,
        "scheduler": model.scheduler().spec(),
        "state": encode("state", &model.state)?,
    }))
}

pub fn to_string<A, S, X>(model: &Model<A, S, X>, name: &str) -> Result<String, PersistError>
where
    A: AgentData,
    S: Space + Serialize,
    S::Pos: Serialize,
    X: Serialize,
{
    let mut s = serde_json::to_string_pretty(&to_json(model, name)?).map_err(|e| corrupt("", e))?;
    s.push('\n');
    Ok(s)
}

/// Writes the checkpoint. The model must be between steps.
pub fn save<A, S, X, W>(model: &Model<A, S, X>, name: &str, mut sink: W) -> Result<(), PersistError>
where
    A: AgentData,
    S: Space + Serialize,
    S::Pos: Serialize,
    X: Serialize,
    W: io::Write,
{
    sink.write_all(to_string(model, name)?.as_bytes())?;
    sink.flush()?;
    Ok(())
}

fn field<'j>(obj: &'j Map<String, Json>, path: &str, key: &str) -> Result<&'j Json, PersistError> {
    obj.get(key).ok_or_else(|| corrupt(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn decode<T: DeserializeOwned>(obj: &Map<String, Json>, path: &str, key: &str) -> Result<T, PersistError> {
    serde_json::from_value(field(obj, path, key)?.clone()).map_err(|e| corrupt(join(path, key), e))
}

fn parse_root(text: &str) -> Result<Map<String, Json>, PersistError> {
    let root: Json = serde_json::from_str(text).map_err(|e| corrupt("", e))?;
    let Json::Object(root) = root else {
        return Err(corrupt("", "checkpoint is not an object"));
    };
    match root.get("format_version") {
        None => return Err(corrupt("format_version", "missing field")),
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(PersistError::UnsupportedVersion { found: v.clone() }),
    }
    Ok(root)
}

/// Model name recorded in a checkpoint, after the version check.
pub fn model_name(text: &str) -> Result<String, PersistError> {
    decode(&parse_root(text)?, "", "model")
}

/// A loaded checkpoint.
pub struct Restored<A, S: Space, X> {
    pub name: String,
    pub model: Model<A, S, X>,
}

/// Rebuilds a model from checkpoint text. Filtered and custom schedulers are
/// not data, so they must be passed in `scheduler`; an explicit scheduler
/// always overrides the recorded one.
pub fn from_str<A, S, X>(text: &str, scheduler: Option<Scheduler<A, S, X>>) -> Result<Restored<A, S, X>, PersistError>
where
    A: AgentData,
    S: Space + DeserializeOwned,
    S::Pos: DeserializeOwned,
    X: DeserializeOwned,
{
    let root = parse_root(text)?;
    let name: String = decode(&root, "", "model")?;
    let step_count: u64 = decode(&root, "", "step_count")?;
    let next_id: u64 = decode(&root, "", "next_id")?;
    let properties: Properties = decode(&root, "", "properties")?;
    let space: S = decode(&root, "", "space")?;
    let rng: Rng = decode(&root, "", "rng")?;
    let spec: SchedulerSpec = decode(&root, "", "scheduler")?;
    let state: X = decode(&root, "", "state")?;
    let scheduler = match scheduler {
        Some(s) => s,
        None => Scheduler::from_spec(&spec).ok_or_else(|| {
            PersistError::SchedulerRequired(match spec {
                SchedulerSpec::Filtered => "filtered".into(),
                _ => "custom".into(),
            })
        })?,
    };

    let Json::Array(raw_agents) = field(&root, "", "agents")? else {
        return Err(corrupt("agents", "expected an array"));
    };
    let mut agents = Vec::with_capacity(raw_agents.len());
    let mut last: Option<AgentId> = None;
    for (i, raw) in raw_agents.iter().enumerate() {
        let path = format!("agents[{i}]");
        let Json::Object(obj) = raw else {
            return Err(corrupt(path, "expected an object"));
        };
        let id: AgentId = decode(obj, &path, "id")?;
        if last.is_some_and(|l| l >= id) {
            return Err(corrupt(join(&path, "id"), "agent ids must be strictly ascending"));
        }
        if id.0 == 0 || id.0 >= next_id {
            return Err(corrupt(join(&path, "id"), format!("id {id} outside 1..{next_id}")));
        }
        last = Some(id);
        let kind: String = decode(obj, &path, "kind")?;
        let pos: S::Pos = decode(obj, &path, "pos")?;
        if !space.is_valid(&pos) {
            return Err(corrupt(join(&path, "pos"), format!("{pos:?} is not a position in the space")));
        }
        let props: BTreeMap<String, Value> = decode(obj, &path, "props")?;
        let data = A::from_props(&kind, &props).map_err(|e| corrupt(join(&path, "props"), e))?;
        agents.push((id, pos, data));
    }

    let model = Model::from_parts(space, properties, state, rng, scheduler, step_count, next_id, agents);
    Ok(Restored { name, model })
}

pub fn load<A, S, X, R>(mut source: R, scheduler: Option<Scheduler<A, S, X>>) -> Result<Restored<A, S, X>, PersistError>
where
    A: AgentData,
    S: Space + DeserializeOwned,
    S::Pos: DeserializeOwned,
    X: DeserializeOwned,
    R: io::Read,
{
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    from_str(&text, scheduler)
}
