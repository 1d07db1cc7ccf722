//! The model container: alive agents, their space, model-level parameters,
//! the scheduler, the random source and the step counter.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentData, AgentId};
use crate::rng::Rng;
use crate::schedule::Scheduler;
use crate::space::{DiscreteSpace, Space};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no empty position left in the space")]
    NoEmpty,
    #[error("no alive agent with id {0}")]
    NotFound(AgentId),
    #[error("sampling weights are all zero (or there are no agents)")]
    DegenerateWeights,
}

/// Named model-level parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Properties(BTreeMap<String, Value>);

impl Properties {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(name.into(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    /// Numeric property; panics if absent or non-numeric.
    pub fn f64(&self, name: &str) -> f64 {
        self.get(name)
            .and_then(Value::as_f64)
            .unwrap_or_else(|| panic!("model property `{name}` missing or not numeric"))
    }

    /// Integer property; panics if absent or non-integer.
    pub fn int(&self, name: &str) -> i64 {
        self.get(name)
            .and_then(Value::as_i64)
            .unwrap_or_else(|| panic!("model property `{name}` missing or not an integer"))
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name)
            .and_then(Value::as_bool)
            .unwrap_or_else(|| panic!("model property `{name}` missing or not boolean"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<Value>> FromIterator<(K, V)> for Properties {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Properties(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

pub type AgentStep<A, S, X> = Arc<dyn Fn(AgentId, &mut Model<A, S, X>) + Send + Sync>;
pub type ModelStep<A, S, X> = Arc<dyn Fn(&mut Model<A, S, X>) + Send + Sync>;

/// The dynamics of a model: what an activated agent does and what happens
/// to the model as a whole once per step. Either part may be absent.
pub struct StepFunctions<A, S: Space, X> {
    pub agent_step: Option<AgentStep<A, S, X>>,
    pub model_step: Option<ModelStep<A, S, X>>,
    /// Run `model_step` before the agents instead of after them.
    pub model_step_first: bool,
}

impl<A, S: Space, X> Clone for StepFunctions<A, S, X> {
    fn clone(&self) -> Self {
        StepFunctions {
            agent_step: self.agent_step.clone(),
            model_step: self.model_step.clone(),
            model_step_first: self.model_step_first,
        }
    }
}

impl<A, S: Space, X> Default for StepFunctions<A, S, X> {
    fn default() -> Self {
        StepFunctions {
            agent_step: None,
            model_step: None,
            model_step_first: false,
        }
    }
}

impl<A, S: Space, X> StepFunctions<A, S, X> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn agent(mut self, f: impl Fn(AgentId, &mut Model<A, S, X>) + Send + Sync + 'static) -> Self {
        self.agent_step = Some(Arc::new(f));
        self
    }

    pub fn model(mut self, f: impl Fn(&mut Model<A, S, X>) + Send + Sync + 'static) -> Self {
        self.model_step = Some(Arc::new(f));
        self
    }

    pub fn model_first(mut self) -> Self {
        self.model_step_first = true;
        self
    }
}

/// When a stepping loop ends: after a number of steps, or once a predicate
/// of `(model, steps taken so far)` returns true.
pub enum Stop<'a, M> {
    After(u64),
    When(&'a dyn Fn(&M, u64) -> bool),
}

impl<M> From<u64> for Stop<'_, M> {
    fn from(n: u64) -> Self {
        Stop::After(n)
    }
}

impl<M> Stop<'_, M> {
    pub fn done(&self, model: &M, taken: u64) -> bool {
        match self {
            Stop::After(n) => taken >= *n,
            Stop::When(f) => f(model, taken),
        }
    }
}

/// An agent-based model.
///
/// `A` is the agent data, `S` the space and `X` any typed model-level state
/// that is not a tunable parameter (grass fields, fish stock, …).
pub struct Model<A, S: Space, X = ()> {
    agents: BTreeMap<AgentId, Agent<A, S::Pos>>,
    space: S,
    pub properties: Properties,
    pub state: X,
    pub rng: Rng,
    scheduler: Scheduler<A, S, X>,
    step_count: u64,
    next_id: u64,
}

impl<A, S, X> Clone for Model<A, S, X>
where
    A: Clone,
    S: Space + Clone,
    X: Clone,
{
    fn clone(&self) -> Self {
        Model {
            agents: self.agents.clone(),
            space: self.space.clone(),
            properties: self.properties.clone(),
            state: self.state.clone(),
            rng: self.rng.clone(),
            scheduler: self.scheduler.clone(),
            step_count: self.step_count,
            next_id: self.next_id,
        }
    }
}

impl<A: AgentData, S: Space, X> Model<A, S, X> {
    /// Empty model with default scheduler (`fastest`), no properties and seed 0.
    pub fn new(space: S, state: X) -> Self {
        Model {
            agents: BTreeMap::new(),
            space,
            properties: Properties::new(),
            state,
            rng: Rng::seed_from_u64(0),
            scheduler: Scheduler::Fastest,
            step_count: 0,
            next_id: 1,
        }
    }

    pub fn with_properties(mut self, properties: Properties) -> Self {
        self.properties = properties;
        self
    }

    pub fn with_scheduler(mut self, scheduler: Scheduler<A, S, X>) -> Self {
        self.scheduler = scheduler;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = Rng::seed_from_u64(seed);
        self
    }

    /// Reassembles a model from checkpointed parts. Agents are registered in
    /// id order; `next_id` must exceed every agent id.
    pub(crate) fn from_parts(
        space: S,
        properties: Properties,
        state: X,
        rng: Rng,
        scheduler: Scheduler<A, S, X>,
        step_count: u64,
        next_id: u64,
        agents: Vec<(AgentId, S::Pos, A)>,
    ) -> Self {
        let mut model = Model {
            agents: BTreeMap::new(),
            space,
            properties,
            state,
            rng,
            scheduler,
            step_count,
            next_id,
        };
        for (id, pos, data) in agents {
            assert!(id.0 < next_id, "agent id {id} not below next_id {next_id}");
            model.space.register_agent(id, &pos);
            model.agents.insert(id, Agent::new(id, pos, data));
        }
        model
    }

    pub fn space(&self) -> &S {
        &self.space
    }

    /// Direct space access for topology changes (graph edits). Must not be
    /// used to register or move agents.
    pub fn space_mut(&mut self) -> &mut S {
        &mut self.space
    }

    pub fn scheduler(&self) -> &Scheduler<A, S, X> {
        &self.scheduler
    }

    pub fn set_scheduler(&mut self, scheduler: Scheduler<A, S, X>) {
        self.scheduler = scheduler;
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Next id to be issued; greater than every id ever issued.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.agents.contains_key(&id)
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent<A, S::Pos>> {
        self.agents.get(&id)
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Option<&mut Agent<A, S::Pos>> {
        self.agents.get_mut(&id)
    }

    /// Alive agents in ascending id order.
    pub fn agents(&self) -> impl DoubleEndedIterator<Item = &Agent<A, S::Pos>> + ExactSizeIterator + '_ {
        self.agents.values()
    }

    pub fn agents_mut(&mut self) -> impl DoubleEndedIterator<Item = &mut Agent<A, S::Pos>> + ExactSizeIterator + '_ {
        self.agents.values_mut()
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = AgentId> + ExactSizeIterator + '_ {
        self.agents.keys().copied()
    }

    fn issue_id(&mut self) -> AgentId {
        let id = AgentId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Adds an agent at `pos`. Panics if `pos` is not a valid position.
    pub fn add_agent(&mut self, pos: S::Pos, data: A) -> AgentId {
        let pos = self.space.normalize(pos);
        assert!(self.space.is_valid(&pos), "invalid position {pos:?}");
        let id = self.issue_id();
        self.space.register_agent(id, &pos);
        self.agents.insert(id, Agent::new(id, pos, data));
        id
    }

    /// Adds an agent at a position drawn by the space.
    pub fn add_agent_random(&mut self, data: A) -> AgentId {
        let pos = self.space.random_position(&mut self.rng);
        self.add_agent(pos, data)
    }

    /// Moves an agent. Periodic spaces wrap `pos`; panics if the agent is
    /// dead or `pos` is invalid.
    pub fn move_agent(&mut self, id: AgentId, pos: S::Pos) {
        let pos = self.space.normalize(pos);
        assert!(self.space.is_valid(&pos), "invalid position {pos:?}");
        let agent = self
            .agents
            .get_mut(&id)
            .unwrap_or_else(|| panic!("cannot move dead agent {id}"));
        self.space.update_position(id, &agent.pos().clone(), &pos);
        agent.set_pos(pos);
    }

    pub fn kill_agent(&mut self, id: AgentId) -> Result<(), ModelError> {
        let agent = self.agents.remove(&id).ok_or(ModelError::NotFound(id))?;
        self.space.unregister_agent(id, agent.pos());
        Ok(())
    }

    pub fn kill_all(&mut self) {
        for (id, agent) in std::mem::take(&mut self.agents) {
            self.space.unregister_agent(id, agent.pos());
        }
    }

    /// Kills every agent matching `pred`; returns how many died.
    pub fn kill_by(&mut self, mut pred: impl FnMut(&Agent<A, S::Pos>) -> bool) -> usize {
        let doomed: Vec<AgentId> = self.agents.values().filter(|a| pred(a)).map(|a| a.id()).collect();
        for &id in &doomed {
            self.kill_agent(id).expect("agent listed as alive");
        }
        doomed.len()
    }

    /// Replaces the population by `n` draws with replacement, proportional to
    /// `weight`. Every drawn agent is cloned under a fresh id at its source's
    /// position.
    pub fn sample_agents(
        &mut self,
        n: usize,
        mut weight: impl FnMut(&Agent<A, S::Pos>) -> f64,
    ) -> Result<(), ModelError> {
        let mut cumulative = Vec::with_capacity(self.agents.len());
        let mut total = 0.0;
        for a in self.agents.values() {
            let w = weight(a);
            assert!(w >= 0.0 && w.is_finite(), "sampling weight must be finite and non-negative");
            total += w;
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(ModelError::DegenerateWeights);
        }
        let sources: Vec<(S::Pos, A)> = self
            .agents
            .values()
            .map(|a| (a.pos().clone(), a.data.clone()))
            .collect();
        let picks: Vec<usize> = (0..n)
            .map(|_| {
                let u = self.rng.next_float() * total;
                let i = cumulative.partition_point(|&c| c <= u);
                // Skip zero-weight entries that share the boundary.
                i.min(cumulative.len() - 1)
            })
            .collect();
        self.kill_all();
        for i in picks {
            let (pos, data) = sources[i].clone();
            self.add_agent(pos, data);
        }
        Ok(())
    }

    /// Ids within distance `r` of `pos`, including any agent at `pos`.
    pub fn nearby_ids(&self, pos: &S::Pos, r: f64) -> Vec<AgentId> {
        assert!(r >= 0.0, "neighbor radius must be non-negative");
        self.space.neighbor_ids(pos, r)
    }

    /// Ids within distance `r` of agent `id`, excluding the agent itself.
    pub fn nearby_ids_of(&self, id: AgentId, r: f64) -> Vec<AgentId> {
        let pos = self.agents[&id].pos();
        let mut ids = self.nearby_ids(pos, r);
        ids.retain(|&other| other != id);
        ids
    }

    /// Agents within distance `r` of agent `id`, excluding the agent itself.
    pub fn nearby_agents(&self, id: AgentId, r: f64) -> impl Iterator<Item = &Agent<A, S::Pos>> + '_ {
        self.nearby_ids_of(id, r)
            .into_iter()
            .map(move |other| &self.agents[&other])
    }

    /// Advances the model. Each step: the scheduler orders the agents alive
    /// at that moment, each still-alive scheduled agent is activated, and
    /// `model_step` runs once (after the agents unless `model_step_first`).
    /// Agents created during a step wait for the next one.
    pub fn step<'a>(&mut self, fns: &StepFunctions<A, S, X>, stop: impl Into<Stop<'a, Self>>)
    where
        Self: 'a,
    {
        let stop = stop.into();
        let mut taken = 0;
        while !stop.done(self, taken) {
            self.step_once(fns);
            taken += 1;
        }
    }

    pub fn step_once(&mut self, fns: &StepFunctions<A, S, X>) {
        if fns.model_step_first {
            if let Some(ms) = &fns.model_step {
                ms(self);
            }
        }
        if let Some(step) = &fns.agent_step {
            let scheduler = self.scheduler.clone();
            let order = scheduler.order(self);
            for id in order {
                if self.agents.contains_key(&id) {
                    step(id, self);
                }
            }
        }
        if !fns.model_step_first {
            if let Some(ms) = &fns.model_step {
                ms(self);
            }
        }
        self.step_count += 1;
    }

    /// Multi-line description of the model.
    pub fn summary(&self) -> String {
        let props: Vec<String> = self
            .properties
            .iter()
            .map(|(k, v)| format!("{k} => {v}"))
            .collect();
        format!(
            "AgentBasedModel with {} agents of type {}\n space: {}\n scheduler: {}\n properties: {}",
            self.agents.len(),
            A::type_name(),
            self.space.describe(),
            self.scheduler,
            if props.is_empty() { "none".to_string() } else { props.join(", ") }
        )
    }
}

impl<A: AgentData, S: DiscreteSpace, X> Model<A, S, X> {
    /// Adds an agent at a uniformly random empty position.
    pub fn add_agent_single(&mut self, data: A) -> Result<AgentId, ModelError> {
        let pos = self
            .space
            .random_empty(&mut self.rng)
            .ok_or(ModelError::NoEmpty)?;
        Ok(self.add_agent(pos, data))
    }

    /// One new agent per currently empty position, in position order.
    pub fn fill_space(&mut self, mut make: impl FnMut(&S::Pos, &mut Rng) -> A) -> usize {
        let empties = self.space.empty_positions();
        for pos in &empties {
            let data = make(pos, &mut self.rng);
            self.add_agent(pos.clone(), data);
        }
        empties.len()
    }

    /// Moves the agent to a random empty position. Returns false, leaving it
    /// in place, when there is none.
    pub fn move_agent_single(&mut self, id: AgentId) -> bool {
        assert!(self.contains(id), "cannot move dead agent {id}");
        match self.space.random_empty(&mut self.rng) {
            Some(pos) => {
                self.move_agent(id, pos);
                true
            }
            None => false,
        }
    }

    /// Positions at distance `1..=r` from `pos` (origin excluded).
    pub fn nearby_positions(&self, pos: &S::Pos, r: f64) -> Vec<S::Pos> {
        assert!(r >= 0.0, "neighbor radius must be non-negative");
        self.space.neighbor_positions(pos, r)
    }

    pub fn is_empty_at(&self, pos: &S::Pos) -> bool {
        self.space.is_empty(pos)
    }

    pub fn ids_at(&self, pos: &S::Pos) -> &[AgentId] {
        self.space.ids_at(pos)
    }
}

impl<A, S: Space, X> Index<AgentId> for Model<A, S, X> {
    type Output = Agent<A, S::Pos>;

    fn index(&self, id: AgentId) -> &Self::Output {
        self.agents
            .get(&id)
            .unwrap_or_else(|| panic!("no alive agent with id {id}"))
    }
}

impl<A, S: Space, X> IndexMut<AgentId> for Model<A, S, X> {
    fn index_mut(&mut self, id: AgentId) -> &mut Self::Output {
        self.agents
            .get_mut(&id)
            .unwrap_or_else(|| panic!("no alive agent with id {id}"))
    }
}

impl<A: AgentData, S: Space, X> fmt::Display for Model<A, S, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

impl<A: AgentData + fmt::Debug, S: Space, X> fmt::Debug for Model<A, S, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("step_count", &self.step_count)
            .field("next_id", &self.next_id)
            .field("agents", &self.agents)
            .finish_non_exhaustive()
    }
}
