//! Type-erased simulations, so front ends can drive any reference model by
//! name.

use std::fmt;

use abm::collect::{self, CollectError};
use abm::persist::{self, PersistError};
use abm::{AgentCollector, AgentData, DataTable, Model, ModelCollector, Properties, Space, StepFunctions, Value};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Allowed values of a parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamRange {
    Values { values: Vec<Value> },
    Interval { min: f64, max: f64, step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub default: Value,
    pub range: ParamRange,
    /// Live parameters are read every step; the rest only when the model is
    /// (re)built.
    pub live: bool,
    pub description: String,
}

impl ParamSpec {
    pub fn values<V: Into<Value>>(name: &str, default: impl Into<Value>, values: impl IntoIterator<Item = V>) -> Self {
        ParamSpec {
            name: name.into(),
            default: default.into(),
            range: ParamRange::Values { values: values.into_iter().map(Into::into).collect() },
            live: true,
            description: String::new(),
        }
    }

    pub fn interval(name: &str, default: impl Into<Value>, min: f64, max: f64, step: f64) -> Self {
        ParamSpec {
            name: name.into(),
            default: default.into(),
            range: ParamRange::Interval { min, max, step },
            live: true,
            description: String::new(),
        }
    }

    pub fn fixed(mut self) -> Self {
        self.live = false;
        self
    }

    pub fn about(mut self, text: &str) -> Self {
        self.description = text.into();
        self
    }

    /// Coerces `value` to the parameter's type and checks the range.
    pub fn check(&self, value: &Value) -> Result<Value, ParamError> {
        let coerced = match (&self.default, value) {
            (Value::Real(_), Value::Int(i)) => Value::Real(*i as f64),
            (Value::Int(_), Value::Real(x)) if x.fract() == 0.0 && x.abs() < 9e15 => Value::Int(*x as i64),
            (Value::Str(_), v) if !matches!(v, Value::Str(_)) => Value::Str(v.to_string()),
            (d, v) if d.type_name() == v.type_name() => v.clone(),
            _ => {
                return Err(ParamError::WrongType {
                    name: self.name.clone(),
                    expected: self.default.type_name(),
                    value: value.clone(),
                })
            }
        };
        let ok = match &self.range {
            ParamRange::Values { values } => values.contains(&coerced),
            ParamRange::Interval { min, max, .. } => coerced.as_f64().is_some_and(|x| x >= *min && x <= *max),
        };
        if ok {
            Ok(coerced)
        } else {
            Err(ParamError::OutOfRange { name: self.name.clone(), value: coerced })
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("parameter `{name}` expects {expected}, got {value}")]
    WrongType { name: String, expected: &'static str, value: Value },
    #[error("value {value} is outside the range of `{name}`")]
    OutOfRange { name: String, value: Value },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ParamError {
    pub fn code(&self) -> &'static str {
        match self {
            ParamError::Unknown(_) => "unknown_param",
            ParamError::WrongType { .. } => "param_wrong_type",
            ParamError::OutOfRange { .. } => "param_out_of_range",
            ParamError::Invalid(_) => "invalid_config",
        }
    }
}

/// Defaults overridden by `overrides`, each checked against its spec.
pub fn resolve_config(specs: &[ParamSpec], overrides: &[(String, Value)]) -> Result<Properties, ParamError> {
    let mut props: Properties = specs.iter().map(|p| (p.name.clone(), p.default.clone())).collect();
    for (name, value) in overrides {
        let spec = specs
            .iter()
            .find(|p| &p.name == name)
            .ok_or_else(|| ParamError::Unknown(name.clone()))?;
        props.set(name.clone(), spec.check(value)?);
    }
    Ok(props)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Circle,
    Rect,
    Triangle,
}

/// How one agent is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visual {
    /// `#rrggbb`.
    pub color: String,
    pub marker: Marker,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub color: String,
    pub marker: Marker,
    pub size: f64,
}

/// Drawable state at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    /// Width and height of the drawing area in position units.
    pub extent: [f64; 2],
    pub agents: Vec<AgentView>,
    /// Row-major `heat[y][x]` layer drawn beneath the agents.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heat: Option<Vec<Vec<f64>>>,
}

pub type AgentCollectors<D> = Vec<AgentCollector<<D as ModelDef>::Agent, <<D as ModelDef>::Space as Space>::Pos>>;
pub type ModelOf<D> = Model<<D as ModelDef>::Agent, <D as ModelDef>::Space, <D as ModelDef>::State>;

/// A labelled scalar read from the model every step.
pub struct Series<M> {
    pub label: &'static str,
    pub value: fn(&M) -> f64,
}

/// A scalar cost computed by running a freshly built model.
pub struct Objective<M> {
    pub name: &'static str,
    pub description: &'static str,
    pub cost: fn(&mut M, u64) -> f64,
}

/// Everything needed to run a reference model by name.
pub trait ModelDef: 'static {
    type Agent: AgentData + Send + 'static;
    type Space: Space<Pos: Serialize + DeserializeOwned + Send> + Serialize + DeserializeOwned + Send + 'static;
    type State: Serialize + DeserializeOwned + Send + 'static;

    const NAME: &'static str;
    const DESCRIPTION: &'static str;

    fn params() -> Vec<ParamSpec>;
    /// Checks relations between parameters that single ranges cannot express.
    fn validate(_props: &Properties) -> Result<(), ParamError> {
        Ok(())
    }
    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError>;
    fn step_functions() -> StepFunctions<Self::Agent, Self::Space, Self::State>;

    /// Named agent collectors, keyed by their column name.
    fn agent_collectors() -> AgentCollectors<Self>;
    fn model_collectors() -> Vec<ModelCollector<ModelOf<Self>>> {
        Vec::new()
    }
    fn series() -> Vec<Series<ModelOf<Self>>>;
    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        Vec::new()
    }

    fn visual(agent: &abm::Agent<Self::Agent, <Self::Space as Space>::Pos>) -> Visual;
    fn xy(pos: &<Self::Space as Space>::Pos) -> (f64, f64);
    fn extent(model: &ModelOf<Self>) -> [f64; 2];
    fn heat(_model: &ModelOf<Self>) -> Option<Vec<Vec<f64>>> {
        None
    }
    /// Whether the run has reached its natural end.
    fn finished(_model: &ModelOf<Self>) -> bool {
        false
    }
}

/// A reference model behind a uniform interface.
pub trait Simulation: Send {
    fn name(&self) -> &'static str;
    fn step(&mut self, n: u64);
    /// Steps until the model reports it is finished or `max` steps pass;
    /// returns the steps taken.
    fn step_until_finished(&mut self, max: u64) -> u64;
    fn finished(&self) -> bool;
    fn step_count(&self) -> u64;
    fn agent_count(&self) -> usize;
    fn properties(&self) -> &Properties;
    fn param_specs(&self) -> Vec<ParamSpec>;
    /// Validates and stores a parameter; live ones act from the next step.
    fn set_param(&mut self, name: &str, value: &Value) -> Result<Value, ParamError>;
    fn snapshot(&self) -> Snapshot;
    fn series_labels(&self) -> Vec<&'static str>;
    fn series_values(&self) -> Vec<(&'static str, f64)>;
    /// Steps `steps` times collecting the named collectors every `when` steps.
    fn run_collect(
        &mut self,
        steps: u64,
        adata: &[String],
        mdata: &[String],
        when: u64,
    ) -> Result<(DataTable, DataTable), RunError>;
    fn objective(&mut self, name: &str, max_steps: u64) -> Result<f64, RunError>;
    fn checkpoint(&self) -> Result<String, PersistError>;
    fn summary(&self) -> String;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown agent collector `{0}`")]
    UnknownAgentCollector(String),
    #[error("unknown model collector `{0}`")]
    UnknownModelCollector(String),
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error(transparent)]
    Collect(#[from] CollectError),
}

pub struct Runner<D: ModelDef> {
    pub model: ModelOf<D>,
    fns: StepFunctions<D::Agent, D::Space, D::State>,
}

impl<D: ModelDef> Runner<D> {
    pub fn new(model: ModelOf<D>) -> Self {
        Runner { model, fns: D::step_functions() }
    }

    pub fn build(props: &Properties, seed: u64) -> Result<Self, ParamError> {
        D::validate(props)?;
        Ok(Self::new(D::build(props, seed)?))
    }
}

impl<D: ModelDef> fmt::Debug for Runner<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.model.summary())
    }
}

impl<D: ModelDef> Simulation for Runner<D>
where
    ModelOf<D>: Send,
{
    fn name(&self) -> &'static str {
        D::NAME
    }

    fn step(&mut self, n: u64) {
        self.model.step(&self.fns, n);
    }

    fn step_until_finished(&mut self, max: u64) -> u64 {
        let start = self.model.step_count();
        let done = |m: &ModelOf<D>, taken: u64| taken >= max || D::finished(m);
        self.model.step(&self.fns, abm::Stop::When(&done));
        self.model.step_count() - start
    }

    fn finished(&self) -> bool {
        D::finished(&self.model)
    }

    fn step_count(&self) -> u64 {
        self.model.step_count()
    }

    fn agent_count(&self) -> usize {
        self.model.len()
    }

    fn properties(&self) -> &Properties {
        &self.model.properties
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        D::params()
    }

    fn set_param(&mut self, name: &str, value: &Value) -> Result<Value, ParamError> {
        let spec = D::params()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| ParamError::Unknown(name.into()))?;
        let v = spec.check(value)?;
        let mut next = self.model.properties.clone();
        next.set(name, v.clone());
        D::validate(&next)?;
        self.model.properties = next;
        Ok(v)
    }

    fn snapshot(&self) -> Snapshot {
        let agents = self
            .model
            .agents()
            .map(|a| {
                let (x, y) = D::xy(a.pos());
                let v = D::visual(a);
                AgentView { id: a.id().0, x, y, color: v.color, marker: v.marker, size: v.size }
            })
            .collect();
        Snapshot {
            step: self.model.step_count(),
            extent: D::extent(&self.model),
            agents,
            heat: D::heat(&self.model),
        }
    }

    fn series_labels(&self) -> Vec<&'static str> {
        D::series().iter().map(|s| s.label).collect()
    }

    fn series_values(&self) -> Vec<(&'static str, f64)> {
        D::series().iter().map(|s| (s.label, (s.value)(&self.model))).collect()
    }

    fn run_collect(
        &mut self,
        steps: u64,
        adata: &[String],
        mdata: &[String],
        when: u64,
    ) -> Result<(DataTable, DataTable), RunError> {
        let known_a = D::agent_collectors();
        let a = adata
            .iter()
            .map(|n| {
                known_a
                    .iter()
                    .find(|c| &c.column_name() == n)
                    .cloned()
                    .ok_or_else(|| RunError::UnknownAgentCollector(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let known_m = D::model_collectors();
        let m = mdata
            .iter()
            .map(|n| {
                known_m
                    .iter()
                    .find(|c| c.column_name() == n)
                    .cloned()
                    .or_else(|| self.model.properties.contains(n).then(|| ModelCollector::property(n.clone())))
                    .ok_or_else(|| RunError::UnknownModelCollector(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(collect::run(&mut self.model, &self.fns, steps, &a, &m, when)?)
    }

    fn objective(&mut self, name: &str, max_steps: u64) -> Result<f64, RunError> {
        let obj = D::objectives()
            .into_iter()
            .find(|o| o.name == name)
            .ok_or_else(|| RunError::UnknownObjective(name.into()))?;
        Ok((obj.cost)(&mut self.model, max_steps))
    }

    fn checkpoint(&self) -> Result<String, PersistError> {
        persist::to_string(&self.model, D::NAME)
    }

    fn summary(&self) -> String {
        self.model.summary()
    }
}

/// Names of the agent collectors a model offers.
pub fn agent_collector_names<D: ModelDef>() -> Vec<String> {
    D::agent_collectors().iter().map(|c| c.column_name()).collect()
}

/// Names of the model collectors a model offers (its parameters are always
/// collectable too).
pub fn model_collector_names<D: ModelDef>() -> Vec<String> {
    D::model_collectors().iter().map(|c| c.column_name().to_string()).collect()
}

impl fmt::Debug for dyn Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at step {}", self.name(), self.step_count())
    }
}
