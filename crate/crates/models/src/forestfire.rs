//! Forest fire as a cellular automaton on the grid's cells.
//!
//! Trees grow with probability `density`; the left column starts burning.
//! Each step burning trees ignite their green neighbors and burn out. The
//! run ends when nothing burns. Fire spreads to the four orthogonal
//! neighbors by default (`neighborhood = von_neumann`) or to all eight
//! (`moore`).

use std::collections::BTreeMap;

use abm::{AgentData, DiscreteSpace, GridSpace, Metric, Model, ModelCollector, Properties, StepFunctions, Value};
use serde::{Deserialize, Serialize};

use crate::sim::{AgentCollectors, ModelDef, ModelOf, Objective, ParamError, ParamSpec, Series, Visual};

/// The forest has no agents.
#[derive(Clone, Debug, PartialEq)]
pub enum NoAgent {}

impl AgentData for NoAgent {
    fn props(&self) -> Vec<(&'static str, Value)> {
        match *self {}
    }

    fn from_props(kind: &str, _props: &BTreeMap<String, Value>) -> Result<Self, String> {
        Err(format!("the forest has no agents, found `{kind}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tree {
    Empty,
    Green,
    Burning,
    Burnt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    /// One entry per cell in the grid's linear order.
    pub cells: Vec<Tree>,
    /// Linear indices of the burning cells, in ignition order.
    pub burning: Vec<usize>,
}

pub type ForestModel = Model<NoAgent, GridSpace<2>, Forest>;

pub fn spread(model: &mut ForestModel) {
    let burning = std::mem::take(&mut model.state.burning);
    let mut next = Vec::new();
    for cell in burning {
        model.state.cells[cell] = Tree::Burnt;
        let pos = model.space().position_of(cell);
        for n in model.space().neighbor_positions(&pos, 1.0) {
            let j = model.space().linear_index(&n);
            if model.state.cells[j] == Tree::Green {
                model.state.cells[j] = Tree::Burning;
                next.push(j);
            }
        }
    }
    model.state.burning = next;
}

pub fn initialize(props: &Properties, seed: u64) -> Result<ForestModel, ParamError> {
    let dims = [props.int("width") as usize, props.int("height") as usize];
    let density = props.f64("density");
    let metric = match props.get("neighborhood").and_then(Value::as_str) {
        Some("moore") => Metric::Chebyshev,
        _ => Metric::Euclidean,
    };
    let space = GridSpace::with_metric(dims, false, metric);
    let forest = Forest { cells: Vec::with_capacity(space.cell_count()), burning: Vec::new() };
    let mut model = Model::new(space, forest).with_properties(props.clone()).with_seed(seed);
    for i in 0..model.space().cell_count() {
        let tree = if model.rng.chance(density) { Tree::Green } else { Tree::Empty };
        model.state.cells.push(tree);
        if tree == Tree::Green && model.space().position_of(i)[0] == 0 {
            model.state.cells[i] = Tree::Burning;
            model.state.burning.push(i);
        }
    }
    Ok(model)
}

fn tally(model: &ForestModel, tree: Tree) -> usize {
    model.state.cells.iter().filter(|c| **c == tree).count()
}

/// Burnt trees as a fraction of all trees that ever stood.
pub fn burnt_fraction(model: &ForestModel) -> f64 {
    let trees = model.state.cells.iter().filter(|c| **c != Tree::Empty).count();
    if trees == 0 {
        0.0
    } else {
        tally(model, Tree::Burnt) as f64 / trees as f64
    }
}

pub struct ForestFire;

impl ModelDef for ForestFire {
    type Agent = NoAgent;
    type Space = GridSpace<2>;
    type State = Forest;

    const NAME: &'static str = "forestfire";
    const DESCRIPTION: &'static str = "Forest fire spreading from the left edge through a random forest";

    fn params() -> Vec<ParamSpec> {
        vec![
            ParamSpec::interval("width", 100, 2.0, 2000.0, 1.0).fixed(),
            ParamSpec::interval("height", 100, 2.0, 2000.0, 1.0).fixed(),
            ParamSpec::interval("density", 0.7, 0.0, 1.0, 0.01).fixed().about("probability a cell holds a tree"),
            ParamSpec::values("neighborhood", "von_neumann", ["von_neumann", "moore"]).fixed(),
        ]
    }

    fn build(props: &Properties, seed: u64) -> Result<ModelOf<Self>, ParamError> {
        initialize(props, seed)
    }

    fn step_functions() -> StepFunctions<NoAgent, GridSpace<2>, Forest> {
        StepFunctions::new().model(spread)
    }

    fn agent_collectors() -> AgentCollectors<Self> {
        Vec::new()
    }

    fn model_collectors() -> Vec<ModelCollector<ModelOf<Self>>> {
        vec![
            ModelCollector::func("green", |m: &ForestModel| tally(m, Tree::Green).into()),
            ModelCollector::func("burning", |m: &ForestModel| m.state.burning.len().into()),
            ModelCollector::func("burnt", |m: &ForestModel| tally(m, Tree::Burnt).into()),
            ModelCollector::func("burnt_fraction", |m: &ForestModel| burnt_fraction(m).into()),
        ]
    }

    fn series() -> Vec<Series<ModelOf<Self>>> {
        vec![
            Series { label: "burning", value: |m| m.state.burning.len() as f64 },
            Series { label: "burnt fraction", value: burnt_fraction },
        ]
    }

    fn objectives() -> Vec<Objective<ModelOf<Self>>> {
        vec![Objective {
            name: "burnt_fraction",
            description: "fraction of trees burnt once the fire is out",
            cost: |m, max_steps| {
                let fns = ForestFire::step_functions();
                let done = |m: &ForestModel, taken: u64| taken >= max_steps || m.state.burning.is_empty();
                m.step(&fns, abm::Stop::When(&done));
                burnt_fraction(m)
            },
        }]
    }

    fn visual(agent: &abm::Agent<NoAgent, [usize; 2]>) -> Visual {
        match agent.data {}
    }

    fn xy(pos: &[usize; 2]) -> (f64, f64) {
        (pos[0] as f64 + 0.5, pos[1] as f64 + 0.5)
    }

    fn extent(model: &ForestModel) -> [f64; 2] {
        let d = model.space().dims();
        [d[0] as f64, d[1] as f64]
    }

    /// Cell states scaled to `[0, 1]`: empty 0, green 1/3, burnt 2/3,
    /// burning 1.
    fn heat(model: &ForestModel) -> Option<Vec<Vec<f64>>> {
        let [w, h] = model.space().dims();
        let grid = model.space();
        let level = |t: Tree| match t {
            Tree::Empty => 0.0,
            Tree::Green => 1.0 / 3.0,
            Tree::Burnt => 2.0 / 3.0,
            Tree::Burning => 1.0,
        };
        Some(
            (0..h)
                .map(|y| (0..w).map(|x| level(model.state.cells[grid.linear_index(&[x, y])])).collect())
                .collect(),
        )
    }

    fn finished(model: &ForestModel) -> bool {
        model.state.burning.is_empty()
    }
}
