//! Wolf-sheep-grass predation on a periodic grid.
//!
//! Animals random-walk, pay one unit of energy per step, eat (sheep graze
//! grown grass, wolves take a random sheep on their cell), starve at zero
//! energy, and otherwise reproduce asexually by halving their energy. Grass
//! regrows `regrowth_time` steps after being eaten.

use std::collections::BTreeMap;

use abm::{
    AgentCollector, AgentData, AgentId, Aggregator, GridSpace, Model, ModelCollector, Properties, Scheduler,
    StepFunctions, Value,
};
use serde::{Deserialize, Serialize};

use crate::prop_f64;
use crate::sim::{AgentCollectors, Marker, ModelDef, ModelOf, Objective, ParamError, ParamSpec, Series, Visual};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    Sheep,
    Wolf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Animal {
    pub species: Species,
    pub energy: f64,
}

impl Animal {
    pub fn sheep(energy: f64) -> Self {
        Animal { species: Species::Sheep, energy }
    }

    pub fn wolf(energy: f64) -> Self {
        Animal { species: Species::Wolf, energy }
    }
}

impl AgentData for Animal {
    fn kind(&self) -> &'static str {
        match self.species {
            Species::Sheep => "sheep",
            Species::Wolf => "wolf",
        }
    }

    fn props(&self) -> Vec<(&'static str, Value)> {
        vec![("energy", self.energy.into())]
    }

    fn from_props(kind: &str, props: &BTreeMap<String, Value>) -> Result<Self, String> {
        let species = match kind {
            "sheep" => Species::Sheep,
            "wolf" => Species::Wolf,
            other => return Err(format!("unknown animal kind `{other}`")),
        };
        Ok(Animal { species, energy: prop_f64(props, "energy")? })
    }
}

/// Grass layer, one entry per cell in the grid's linear order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grass {
    pub fully_grown: Vec<bool>,
    /// Steps left until regrowth; always in `[0, regrowth_time]`.
    pub countdown: Vec<i64>,
}

pub type WolfSheepModel = Model<Animal, GridSpace<2>, Grass>;

pub fn agent_step(id: AgentId, model: &mut WolfSheepModel) {
    let here = *model[id].pos();
    let options = model.nearby_positions(&here, 1.0);
    if let Some(&to) = model.rng.choose(&options) {
        model.move_agent(id, to);
    }
    let pos = *model[id].pos();
    model[id].energy -= 1.0;

    match model[id].species {
        Species::Sheep => {
            let cell = model.space().linear_index(&pos);
            if model.state.fully_grown[cell] {
                model.state.fully_grown[cell] = false;
                model.state.countdown[cell] = model.properties.int("regrowth_time");
                model[id].energy += model.properties.f64("sheep_gain");
            }
        }
        Species::Wolf => {
            let prey: Vec<AgentId> = model
                .ids_at(&pos)
                .iter()
                .copied()
                .filter(|&o| model[o].species == Species::Sheep)
                .collect();
            if let Some(&victim) = model.rng.choose(&prey) {
                model.kill_agent(victim).expect("prey is alive");
                model[id].energy += model.properties.f64("wolf_gain");
            }
        }
    }

    if model[id].energy <= 0.0 {
        model.kill_agent(id).expect("agent is alive");
        return;
    }
    let p = match model[id].species {
        Species::Sheep => model.properties.f64("sheep_reproduce"),
        Species::Wolf => model.properties.f64("wolf_reproduce"),
    };
    if model.rng.chance(p) {
        model[id].energy /= 2.0;
        let child = model[id].data.clone();
        model.add_agent(pos, child);
    }
}

pub fn grass_step(model: &mut WolfSheepModel) {
    let regrowth = model.properties.int("regrowth_time");
    let grass = &mut model.state;
    for (grown, countdown) in grass.fully_grown.iter_mut().zip(grass.countdown.iter_mut()) {
        if !*grown {
            if *countdown <= 0 {
                *grown = true;
                *countdown = regrowth;
            } else {
                *countdown -= 1;
            }
        }
    }
}

pub fn initialize(props: &Properties, seed: u64) -> Result<WolfSheepModel, ParamError> {
    let dims = [props.int("width") as usize, props.int("height") as usize];
    let regrowth = props.int("regrowth_time");
    let space = GridSpace::new(dims, true);
    let cells = space.cell_count();
    let grass = Grass { fully_grown: Vec::with_capacity(cells), countdown: Vec::with_capacity(cells) };
    let mut model = Model::new(space, grass)
        .with_properties(props.clone())
        .with_scheduler(Scheduler::Random)
        .with_seed(seed);
    for species in [Species::Sheep, Species::Wolf] {
        let (count, gain) = match species {
            Species::Sheep => (props.int("n_sheep"), props.f64("sheep_gain")),
            Species::Wolf => (props.int("n_wolves"), props.f64("wolf_gain")),
        };
        let top = ((2.0 * gain).round() as usize).max(1);
        for _ in 0..count {
            let energy = (model.rng.index(top) + 1) as f64;
            model.add_agent_random(Animal { species, energy });
        }
    }
    for _ in 0..cells {
        let grown = model.rng.chance(0.5);
        let countdown = if grown { regrowth } else { model.rng.index(regrowth.max(1) as usize) as i64 };
        model.state.fully_grown.push(grown);
        model.state.countdown.push(countdown);
    }
    Ok(model)
}

pub fn count(model: &WolfSheepModel, species: Species) -> usize {
    model.agents().filter(|a| a.species == species).count()
}

pub fn grown_grass(model: &WolfSheepModel) -> usize {
    model.state.fully_grown.iter().filter(|g| **g).count()
}

pub struct WolfSheep;

impl ModelDef for WolfSheep {
    type Agent = Animal;
    type Space = GridSpace<2>;
    type State = Grass;

    const NAME: &'static str = "wolfsheep";
    const DESCRIPTION: &'static str = "Wolf-sheep-grass predator-prey dynamics";

    fn params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::interval("width", 25, 2.0, 500.0, 1.0).fixed(),
            ParamSpec::interval("height", 25, 2.0, 500.0, 1.0).fixed(),
            ParamSpec::interval("n_sheep", 100, 0.0, 10000.0, 1.0).fixed(),
            ParamSpec::interval("n_wolves", 20, 0.0, 10000.0, 1.0).fixed(),
            ParamSpec::interval("regrowth_time", 30, 1.0, 200.0, 1.0).fixed(),
            ParamSpec::interval("sheep_gain", 5.0, 0.0, 100.0, 1.0),
            ParamSpec::interval("wolf_gain", 20.0, 0.0, 100.0, 1.0),
            ParamSpec::interval("sheep_reproduce", 0.3, 0.0, 1.0, 0.01),
            ParamSpec::interval("wolf_reproduce", 0.05, 0.0, 1.0, 0.01),
        ]
    }

    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError> {
        initialize(props, seed)
    }

    fn step_functions() -> StepFunctions<Animal, GridSpace<2>, Grass> {
        StepFunctions::new().agent(agent_step).model(grass_step)
    }

    fn agent_collectors() -> AgentCollectors<Self> {
        let sheep = |a: &abm::Agent<Animal, [usize; 2]>| a.species == Species::Sheep;
        let wolf = |a: &abm::Agent<Animal, [usize; 2]>| a.species == Species::Wolf;
        vec![
            AgentCollector::field("energy").aggregate(Aggregator::Count).filtered("sheep", sheep),
            AgentCollector::field("energy").aggregate(Aggregator::Count).filtered("wolf", wolf),
            AgentCollector::field("energy").aggregate(Aggregator::Mean).filtered("sheep", sheep),
            AgentCollector::field("energy").aggregate(Aggregator::Mean).filtered("wolf", wolf),
            AgentCollector::field("energy"),
        ]
    }

    fn model_collectors() -> Vec<ModelCollector<ModelOf<Self>>> {
        vec![ModelCollector::func("grass", |m: &WolfSheepModel| grown_grass(m).into())]
    }

    fn series() -> Vec<Series<ModelOf<Self>>> {
        vec![
            Series { label: "sheep", value: |m| count(m, Species::Sheep) as f64 },
            Series { label: "wolves", value: |m| count(m, Species::Wolf) as f64 },
            Series { label: "grass", value: |m| grown_grass(m) as f64 },
        ]
    }

    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        vec![Objective {
            name: "negative_coexistence",
            description: "minus the number of steps both species stay alive",
            cost: |m, max_steps| {
                let fns = WolfSheep::step_functions();
                let start = m.step_count();
                let done = |m: &WolfSheepModel, taken: u64| {
                    taken >= max_steps || count(m, Species::Sheep) == 0 || count(m, Species::Wolf) == 0
                };
                m.step(&fns, abm::Stop::When(&done));
                -((m.step_count() - start) as f64)
            },
        }]
    }

    fn visual(agent: &abm::Agent<Animal, [usize; 2]>) -> Visual {
        match agent.species {
            Species::Sheep => Visual { color: "#f5f5f5".into(), marker: Marker::Circle, size: 8.0 },
            Species::Wolf => Visual { color: "#3b3b3b".into(), marker: Marker::Triangle, size: 10.0 },
        }
    }

    fn xy(pos: &[usize; 2]) -> (f64, f64) {
        (pos[0] as f64 + 0.5, pos[1] as f64 + 0.5)
    }

    fn extent(model: &WolfSheepModel) -> [f64; 2] {
        let d = model.space().dims();
        [d[0] as f64, d[1] as f64]
    }

    fn heat(model: &WolfSheepModel) -> Option<Vec<Vec<f64>>> {
        let [w, h] = model.space().dims();
        let grid = model.space();
        Some(
            (0..h)
                .map(|y| {
                    (0..w)
                        .map(|x| if model.state.fully_grown[grid.linear_index(&[x, y])] { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect(),
        )
    }
}
