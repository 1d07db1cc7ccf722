//! Boids-style flocking in a periodic 2D box.
//!
//! Each bird blends its heading with cohesion towards, alignment with, and
//! separation from the birds within `visual_distance`, then moves `speed`
//! along the new heading.

use std::collections::BTreeMap;

use abm::{AgentCollector, AgentData, AgentId, Aggregator, ContinuousSpace, Model, Properties, StepFunctions, Value};

use crate::prop_f64;
use crate::sim::{AgentCollectors, Marker, ModelDef, ModelOf, Objective, ParamError, ParamSpec, Series, Visual};

#[derive(Clone, Debug, PartialEq)]
pub struct Bird {
    pub vel: [f64; 2],
}

impl AgentData for Bird {
    fn kind(&self) -> &'static str {
        "bird"
    }

    fn props(&self) -> Vec<(&'static str, Value)> {
        vec![("vx", self.vel[0].into()), ("vy", self.vel[1].into())]
    }

    fn from_props(_kind: &str, props: &BTreeMap<String, Value>) -> Result<Self, String> {
        Ok(Bird { vel: [prop_f64(props, "vx")?, prop_f64(props, "vy")?] })
    }
}

pub type FlockingModel = Model<Bird, ContinuousSpace<2>>;

pub fn agent_step(id: AgentId, model: &mut FlockingModel) {
    let p = &model.properties;
    let (speed, visual, separation) = (p.f64("speed"), p.f64("visual_distance"), p.f64("separation"));
    let (cf, mf, sf) = (p.f64("cohere_factor"), p.f64("match_factor"), p.f64("separate_factor"));

    let pos = *model[id].pos();
    let vel = model[id].vel;
    let neighbors = model.nearby_ids_of(id, visual);
    let mut cohere = [0.0; 2];
    let mut align = [0.0; 2];
    let mut separate = [0.0; 2];
    for &other in &neighbors {
        let heading = model.space().displacement(&pos, model[other].pos());
        let ov = model[other].vel;
        for k in 0..2 {
            cohere[k] += heading[k];
            align[k] += ov[k];
        }
        if heading[0] * heading[0] + heading[1] * heading[1] < separation * separation {
            separate[0] -= heading[0];
            separate[1] -= heading[1];
        }
    }
    let n = neighbors.len().max(1) as f64;
    let mut next = [0.0; 2];
    for k in 0..2 {
        next[k] = (vel[k] + cohere[k] / n * cf + separate[k] / n * sf + align[k] / n * mf) / 2.0;
    }
    let norm = next[0].hypot(next[1]);
    let vel = if norm > 0.0 { [next[0] / norm * speed, next[1] / norm * speed] } else { vel };
    model[id].vel = vel;
    model.move_agent(id, [pos[0] + vel[0], pos[1] + vel[1]]);
}

pub fn initialize(props: &Properties, seed: u64) -> Result<FlockingModel, ParamError> {
    let extent = [props.f64("width"), props.f64("height")];
    let speed = props.f64("speed");
    let mut model = Model::new(ContinuousSpace::new(extent, true), ())
        .with_properties(props.clone())
        .with_seed(seed);
    for _ in 0..props.int("n_birds") {
        let pos = [model.rng.uniform(0.0, extent[0]), model.rng.uniform(0.0, extent[1])];
        let angle = model.rng.uniform(0.0, std::f64::consts::TAU);
        model.add_agent(pos, Bird { vel: [angle.cos() * speed, angle.sin() * speed] });
    }
    Ok(model)
}

/// Length of the mean unit heading: 1 when every bird flies the same way.
pub fn alignment(model: &FlockingModel) -> f64 {
    if model.is_empty() {
        return 0.0;
    }
    let mut sum = [0.0; 2];
    for a in model.agents() {
        let n = a.vel[0].hypot(a.vel[1]);
        if n > 0.0 {
            sum[0] += a.vel[0] / n;
            sum[1] += a.vel[1] / n;
        }
    }
    sum[0].hypot(sum[1]) / model.len() as f64
}

pub struct Flocking;

impl ModelDef for Flocking {
    type Agent = Bird;
    type Space = ContinuousSpace<2>;
    type State = ();

    const NAME: &'static str = "flocking";
    const DESCRIPTION: &'static str = "Boids flocking with cohesion, alignment and separation";

    fn params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::interval("n_birds", 300, 0.0, 5000.0, 1.0).fixed(),
            ParamSpec::interval("width", 100.0, 10.0, 1000.0, 1.0).fixed(),
            ParamSpec::interval("height", 100.0, 10.0, 1000.0, 1.0).fixed(),
            ParamSpec::interval("speed", 1.0, 0.0, 5.0, 0.1),
            ParamSpec::interval("visual_distance", 5.0, 0.0, 20.0, 0.5),
            ParamSpec::interval("separation", 2.0, 0.0, 10.0, 0.5),
            ParamSpec::interval("cohere_factor", 0.03, 0.0, 1.0, 0.01),
            ParamSpec::interval("match_factor", 0.05, 0.0, 1.0, 0.01),
            ParamSpec::interval("separate_factor", 0.25, 0.0, 1.0, 0.01),
        ]
    }

    fn validate(props: &Properties) -> Result<(), ParamError> {
        for name in ["speed", "visual_distance", "separation"] {
            if props.f64(name) <= 0.0 {
                return Err(ParamError::Invalid(format!("{name} must be positive")));
            }
        }
        if props.f64("separation") >= props.f64("visual_distance") {
            return Err(ParamError::Invalid("separation must be below visual_distance".into()));
        }
        Ok(())
    }

    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError> {
        initialize(props, seed)
    }

    fn step_functions() -> StepFunctions<Bird, ContinuousSpace<2>, ()> {
        StepFunctions::new().agent(agent_step)
    }

    fn agent_collectors() -> AgentCollectors<Self> {
        vec![
            AgentCollector::field("vx").aggregate(Aggregator::Mean),
            AgentCollector::field("vy").aggregate(Aggregator::Mean),
            AgentCollector::func("x", |a: &abm::Agent<Bird, [f64; 2]>| a.pos()[0].into()),
            AgentCollector::func("y", |a: &abm::Agent<Bird, [f64; 2]>| a.pos()[1].into()),
            AgentCollector::field("vx"),
            AgentCollector::field("vy"),
        ]
    }

    fn model_collectors() -> Vec<abm::ModelCollector<ModelOf<Self>>> {
        vec![abm::ModelCollector::func("alignment", |m: &FlockingModel| alignment(m).into())]
    }

    fn series() -> Vec<Series<ModelOf<Self>>> {
        vec![Series { label: "alignment", value: alignment }]
    }

    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        vec![Objective {
            name: "disorder",
            description: "1 - alignment after the run",
            cost: |m, steps| {
                m.step(&Flocking::step_functions(), steps);
                1.0 - alignment(m)
            },
        }]
    }

    fn visual(_agent: &abm::Agent<Bird, [f64; 2]>) -> Visual {
        Visual { color: "#333333".into(), marker: Marker::Triangle, size: 6.0 }
    }

    fn xy(pos: &[f64; 2]) -> (f64, f64) {
        (pos[0], pos[1])
    }

    fn extent(model: &FlockingModel) -> [f64; 2] {
        model.space().extent()
    }
}
