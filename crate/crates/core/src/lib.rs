//! Agent-based modelling engine.
//!
//! A [`Model`] holds the alive agents, the [`space`] they live in, model-level
//! [`Properties`], a [`Scheduler`] and a seeded [`Rng`]. Dynamics are supplied
//! as [`StepFunctions`]; [`collect::run`] steps a model while gathering
//! tabular data. Around that core sit an ODE integrator for hybrid models
//! ([`ode`]), parameter scans and evolutionary tuning ([`ensemble`]) and
//! checkpoints ([`persist`]).

pub mod agent;
pub mod collect;
pub mod ensemble;
pub mod model;
pub mod ode;
pub mod persist;
pub mod rng;
pub mod schedule;
pub mod space;
pub mod value;

pub use agent::{Agent, AgentData, AgentId};
pub use collect::{AgentCollector, Aggregator, DataTable, ModelCollector};
pub use model::{Model, ModelError, Properties, StepFunctions, Stop};
pub use rng::Rng;
pub use schedule::{Scheduler, SchedulerSpec};
pub use space::{ContinuousSpace, DiscreteSpace, GraphSpace, GridSpace, Metric, Space};
pub use value::Value;
