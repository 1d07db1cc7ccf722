//! Hybrid fishery: fishers harvest a logistically growing stock.
//!
//! The stock follows `ds/dt = s (1 - s/K) - h` over each unit time step with
//! the harvest `h` held constant. `h` is the summed competence of the fishers
//! while the fishing agency keeps the fishery open; it closes when the stock
//! drops below `stock_threshold` and reopens once it recovers. The stock is
//! advanced either by one Euler step of size 1 (`mode = euler_dt1`) or by the
//! adaptive Dormand–Prince solver (`mode = adaptive`).

use std::collections::BTreeMap;

use abm::ode::{Integrator, IntegratorConfig};
use abm::{AgentCollector, AgentData, AgentId, Aggregator, GraphSpace, Model, ModelCollector, Properties, StepFunctions, Value};
use serde::{Deserialize, Serialize};

use crate::prop_f64;
use crate::sim::{AgentCollectors, Marker, ModelDef, ModelOf, Objective, ParamError, ParamSpec, Series, Visual};

#[derive(Clone, Debug, PartialEq)]
pub struct Fisher {
    /// Catch per unit time while fishing.
    pub competence: f64,
    pub landed: f64,
}

impl AgentData for Fisher {
    fn kind(&self) -> &'static str {
        "fisher"
    }

    fn props(&self) -> Vec<(&'static str, Value)> {
        vec![("competence", self.competence.into()), ("landed", self.landed.into())]
    }

    fn from_props(_kind: &str, props: &BTreeMap<String, Value>) -> Result<Self, String> {
        Ok(Fisher { competence: prop_f64(props, "competence")?, landed: prop_f64(props, "landed")? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stock {
    pub t: f64,
    pub stock: f64,
    /// Whether fishing is allowed during the current step.
    pub open: bool,
    /// Harvest rate applied during the last step.
    pub harvest: f64,
    /// Adaptive step size carried between unit intervals.
    pub step_hint: Option<f64>,
    pub evaluations: u64,
}

pub type FisheryModel = Model<Fisher, GraphSpace, Stock>;

#[derive(Clone, Copy, Debug)]
pub struct Logistic {
    pub capacity: f64,
    pub harvest: f64,
}

/// Logistic growth minus harvest; an empty stock stays empty.
pub fn logistic_rhs(_t: f64, y: &[f64], p: &Logistic, dy: &mut [f64]) {
    dy[0] = if y[0] <= 0.0 { 0.0 } else { y[0] * (1.0 - y[0] / p.capacity) - p.harvest };
}

pub fn fisher_step(id: AgentId, model: &mut FisheryModel) {
    if model.state.open && model.state.stock > 0.0 {
        let c = model[id].competence;
        model[id].landed += c;
    }
}

pub fn stock_step(model: &mut FisheryModel) {
    let harvest = if model.state.open { model.agents().map(|a| a.competence).sum() } else { 0.0 };
    let params = Logistic { capacity: model.properties.f64("carry_capacity"), harvest };
    let config = match model.properties.get("mode").and_then(Value::as_str) {
        Some("euler_dt1") => IntegratorConfig::euler(1.0),
        _ => {
            let tol = model.properties.f64("tolerance");
            IntegratorConfig::adaptive(tol, tol)
        }
    };
    let s = &mut model.state;
    let mut ode = Integrator::new(logistic_rhs, s.t, vec![s.stock], params, config)
        .expect("valid integrator configuration")
        .with_step_hint(s.step_hint);
    ode.step_to(s.t + 1.0).expect("logistic harvest stays finite");
    s.t += 1.0;
    s.stock = ode.y()[0].max(0.0);
    s.harvest = harvest;
    s.step_hint = ode.step_hint();
    s.evaluations += ode.evaluations();
    s.open = s.stock >= model.properties.f64("stock_threshold");
}

pub fn initialize(props: &Properties, seed: u64) -> Result<FisheryModel, ParamError> {
    let s0 = props.f64("initial_stock");
    let stock = Stock {
        t: 0.0,
        stock: s0,
        open: s0 >= props.f64("stock_threshold"),
        harvest: 0.0,
        step_hint: None,
        evaluations: 0,
    };
    let mut model = Model::new(GraphSpace::with_nodes(1), stock)
        .with_properties(props.clone())
        .with_seed(seed);
    for _ in 0..props.int("n_fishers") {
        model.add_agent(0, Fisher { competence: props.f64("competence"), landed: 0.0 });
    }
    Ok(model)
}

/// Stock at steps `0..=years`.
pub fn trajectory(props: &Properties, seed: u64, years: u64) -> Vec<f64> {
    let mut model = initialize(props, seed).expect("valid fishery config");
    let fns = Fishery::step_functions();
    let mut out = vec![model.state.stock];
    for _ in 0..years {
        model.step_once(&fns);
        out.push(model.state.stock);
    }
    out
}

pub struct Fishery;

impl ModelDef for Fishery {
    type Agent = Fisher;
    type Space = GraphSpace;
    type State = Stock;

    const NAME: &'static str = "fishery";
    const DESCRIPTION: &'static str = "Fishers harvesting a logistic fish stock under a closure rule";

    fn params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::interval("n_fishers", 4, 0.0, 100.0, 1.0).fixed(),
            ParamSpec::interval("competence", 8.0, 0.0, 50.0, 0.5).fixed(),
            ParamSpec::interval("carry_capacity", 120.0, 1.0, 1000.0, 1.0),
            ParamSpec::interval("stock_threshold", 60.0, 0.0, 1000.0, 1.0),
            ParamSpec::interval("initial_stock", 30.0, 0.0, 1000.0, 1.0).fixed(),
            ParamSpec::values("mode", "adaptive", ["adaptive", "euler_dt1"]),
            ParamSpec::interval("tolerance", 1e-8, 1e-12, 1e-2, 1e-9),
        ]
    }

    fn validate(props: &Properties) -> Result<(), ParamError> {
        let s0 = props.f64("initial_stock");
        if !(s0 > 0.0 && s0 <= props.f64("carry_capacity")) {
            return Err(ParamError::Invalid("initial_stock must lie in (0, carry_capacity]".into()));
        }
        Ok(())
    }

    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError> {
        initialize(props, seed)
    }

    fn step_functions() -> StepFunctions<Fisher, GraphSpace, Stock> {
        StepFunctions::new().agent(fisher_step).model(stock_step)
    }

    fn agent_collectors() -> AgentCollectors<Self> {
        vec![
            AgentCollector::field("landed").aggregate(Aggregator::Sum),
            AgentCollector::field("competence").aggregate(Aggregator::Sum),
            AgentCollector::field("landed"),
        ]
    }

    fn model_collectors() -> Vec<ModelCollector<ModelOf<Self>>> {
        vec![
            ModelCollector::func("stock", |m: &FisheryModel| m.state.stock.into()),
            ModelCollector::func("harvest", |m: &FisheryModel| m.state.harvest.into()),
            ModelCollector::func("open", |m: &FisheryModel| m.state.open.into()),
        ]
    }

    fn series() -> Vec<Series<ModelOf<Self>>> {
        vec![
            Series { label: "stock", value: |m| m.state.stock },
            Series { label: "harvest", value: |m| m.state.harvest },
        ]
    }

    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        vec![Objective {
            name: "negative_catch",
            description: "minus the total catch landed over the run",
            cost: |m, steps| {
                m.step(&Fishery::step_functions(), steps);
                -m.agents().map(|a| a.landed).sum::<f64>()
            },
        }]
    }

    fn visual(_agent: &abm::Agent<Fisher, usize>) -> Visual {
        Visual { color: "#2060c0".into(), marker: Marker::Circle, size: 10.0 }
    }

    fn xy(_pos: &usize) -> (f64, f64) {
        (0.5, 0.5)
    }

    fn extent(_model: &FisheryModel) -> [f64; 2] {
        [1.0, 1.0]
    }
}
