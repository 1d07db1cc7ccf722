use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Agent identifier. Issued from 1 upward and never reused within a model.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The model-defined part of an agent.
///
/// Fields are ordinary struct fields; the engine only needs named access at
/// its boundaries (data collection, property schedulers, checkpoints).
/// Mixed-agent models use an enum and report the variant through `kind`.
pub trait AgentData: Clone {
    /// Agent type tag, used by the by-kind scheduler and checkpoints.
    fn kind(&self) -> &'static str {
        "agent"
    }

    /// Named properties as tagged values, in declaration order.
    fn props(&self) -> Vec<(&'static str, Value)>;

    /// Rebuilds agent data from tagged values. Used by checkpoint loading.
    fn from_props(kind: &str, props: &BTreeMap<String, Value>) -> Result<Self, String>;

    /// Named field access. Override when `props` is expensive to build.
    fn get(&self, field: &str) -> Option<Value> {
        self.props()
            .into_iter()
            .find(|(name, _)| *name == field)
            .map(|(_, v)| v)
    }

    /// Short type name for summaries.
    fn type_name() -> &'static str {
        let full = std::any::type_name::<Self>();
        full.rsplit("::").next().unwrap_or(full)
    }
}

/// An alive agent: identity and position are owned by the model, the rest
/// is freely mutable through `Deref`.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent<A, P> {
    id: AgentId,
    pos: P,
    pub data: A,
}

impl<A, P> Agent<A, P> {
    pub(crate) fn new(id: AgentId, pos: P, data: A) -> Self {
        Agent { id, pos, data }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn pos(&self) -> &P {
        &self.pos
    }

    pub(crate) fn set_pos(&mut self, pos: P) {
        self.pos = pos;
    }
}

impl<A: AgentData, P> Agent<A, P> {
    /// Field lookup including the built-in `id`.
    pub fn get(&self, field: &str) -> Option<Value> {
        match field {
            "id" => Some(Value::Int(self.id.0 as i64)),
            _ => self.data.get(field),
        }
    }

    pub fn kind(&self) -> &'static str {
        self.data.kind()
    }
}

impl<A, P> Deref for Agent<A, P> {
    type Target = A;

    fn deref(&self) -> &A {
        &self.data
    }
}

impl<A, P> DerefMut for Agent<A, P> {
    fn deref_mut(&mut self) -> &mut A {
        &mut self.data
    }
}
