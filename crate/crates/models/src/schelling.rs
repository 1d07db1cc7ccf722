//! Schelling segregation on a bounded grid.
//!
//! Unhappy residents move to a random empty cell; a resident becomes happy,
//! and stays put for good, once at least `min_to_be_happy` of its Moore
//! neighbors share its group.

use std::collections::BTreeMap;

use abm::{
    AgentCollector, AgentData, AgentId, Aggregator, GridSpace, Model, Properties, Scheduler, StepFunctions,
    Value,
};

use crate::sim::{AgentCollectors, Marker, ModelDef, ModelOf, Objective, ParamError, ParamSpec, Series, Visual};
use crate::{prop_bool, prop_i64};

#[derive(Clone, Debug, PartialEq)]
pub struct Resident {
    pub mood: bool,
    pub group: i64,
}

impl AgentData for Resident {
    fn kind(&self) -> &'static str {
        "resident"
    }

    fn props(&self) -> Vec<(&'static str, Value)> {
        vec![("mood", self.mood.into()), ("group", self.group.into())]
    }

    fn from_props(_kind: &str, props: &BTreeMap<String, Value>) -> Result<Self, String> {
        Ok(Resident { mood: prop_bool(props, "mood")?, group: prop_i64(props, "group")? })
    }

    fn get(&self, field: &str) -> Option<Value> {
        match field {
            "mood" => Some(self.mood.into()),
            "group" => Some(self.group.into()),
            _ => None,
        }
    }
}

pub type SchellingModel = Model<Resident, GridSpace<2>>;

pub fn agent_step(id: AgentId, model: &mut SchellingModel) {
    let me = &model[id];
    if me.mood {
        return;
    }
    let group = me.group;
    let min = model.properties.int("min_to_be_happy");
    let same = model.nearby_agents(id, 1.0).filter(|a| a.group == group).count() as i64;
    if same >= min {
        model[id].mood = true;
    } else {
        model.move_agent_single(id);
    }
}

/// Residents are placed one per cell; groups 1 and 2 alternate in creation
/// order.
pub fn initialize(props: &Properties, seed: u64) -> Result<SchellingModel, ParamError> {
    let w = props.int("width") as usize;
    let h = props.int("height") as usize;
    let n = (props.f64("density") * (w * h) as f64).round() as usize;
    let mut model = Model::new(GridSpace::new([w, h], false), ())
        .with_properties(props.clone())
        .with_scheduler(Scheduler::Random)
        .with_seed(seed);
    for i in 0..n.min(w * h) {
        model
            .add_agent_single(Resident { mood: false, group: (i % 2) as i64 + 1 })
            .map_err(|e| ParamError::Invalid(e.to_string()))?;
    }
    Ok(model)
}

fn happy(m: &SchellingModel) -> f64 {
    m.agents().filter(|a| a.mood).count() as f64
}

/// Steps until at least 90% of residents are happy; `max_steps` if never.
fn steps_to_90_happy(m: &mut SchellingModel, max_steps: u64) -> f64 {
    let fns = Schelling::step_functions();
    let target = 0.9 * m.len() as f64;
    let start = m.step_count();
    let done = |m: &SchellingModel, taken: u64| taken >= max_steps || happy(m) >= target;
    m.step(&fns, abm::Stop::When(&done));
    (m.step_count() - start) as f64
}

pub struct Schelling;

impl ModelDef for Schelling {
    type Agent = Resident;
    type Space = GridSpace<2>;
    type State = ();

    const NAME: &'static str = "schelling";
    const DESCRIPTION: &'static str = "Schelling segregation: two groups relocate until enough neighbors match";

    fn params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::interval("width", 20, 2.0, 500.0, 1.0).fixed(),
            ParamSpec::interval("height", 20, 2.0, 500.0, 1.0).fixed(),
            ParamSpec::interval("density", 0.8, 0.05, 1.0, 0.05)
                .fixed()
                .about("fraction of cells occupied"),
            ParamSpec::values("min_to_be_happy", 3, 0..=8i64).about("same-group neighbors needed"),
        ]
    }

    fn validate(props: &Properties) -> Result<(), ParamError> {
        let cells = (props.int("width") * props.int("height")) as f64;
        if props.f64("density") * cells < 1.0 {
            return Err(ParamError::Invalid("density leaves the grid empty".into()));
        }
        Ok(())
    }

    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError> {
        initialize(props, seed)
    }

    fn step_functions() -> StepFunctions<Resident, GridSpace<2>, ()> {
        StepFunctions::new().agent(agent_step)
    }

    fn agent_collectors() -> AgentCollectors<Self> {
        let x = |a: &abm::Agent<Resident, [usize; 2]>| Value::Int(a.pos()[0] as i64 + 1);
        vec![
            AgentCollector::field("mood").aggregate(Aggregator::Sum),
            AgentCollector::field("mood").aggregate(Aggregator::Mean),
            AgentCollector::func("x", x).aggregate(Aggregator::Maximum),
            AgentCollector::func("x", x).aggregate(Aggregator::Mean),
            AgentCollector::field("mood"),
            AgentCollector::field("group"),
        ]
    }

    fn series() -> Vec<Series<ModelOf<Self>>> {
        vec![
            Series { label: "happy", value: happy },
            Series {
                label: "avg. x",
                value: |m| m.agents().map(|a| a.pos()[0] as f64 + 1.0).sum::<f64>() / m.len().max(1) as f64,
            },
        ]
    }

    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        vec![Objective {
            name: "steps_to_90_happy",
            description: "steps until 90% of residents are happy",
            cost: steps_to_90_happy,
        }]
    }

    fn visual(agent: &abm::Agent<Resident, [usize; 2]>) -> Visual {
        if agent.group == 1 {
            Visual { color: "#1f77b4".into(), marker: Marker::Circle, size: 10.0 }
        } else {
            Visual { color: "#ff7f0e".into(), marker: Marker::Rect, size: 10.0 }
        }
    }

    fn xy(pos: &[usize; 2]) -> (f64, f64) {
        (pos[0] as f64 + 0.5, pos[1] as f64 + 0.5)
    }

    fn extent(model: &SchellingModel) -> [f64; 2] {
        let d = model.space().dims();
        [d[0] as f64, d[1] as f64]
    }
}
