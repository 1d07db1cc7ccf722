mod common;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use abm::{
    AgentId, DiscreteSpace, GridSpace, Model, ModelError, Properties, Rng, Space, StepFunctions,
};
use common::Walker;

type Grid2 = Model<Walker, GridSpace<2>>;

fn grid(w: usize, h: usize, periodic: bool) -> Grid2 {
    Model::new(GridSpace::new([w, h], periodic), ())
}

#[test]
fn summary_matches_console_block() {
    let m = grid(10, 10, false).with_properties(Properties::new().with("min_to_be_happy", 3));
    assert_eq!(
        m.summary(),
        "AgentBasedModel with 0 agents of type Walker\n space: GridSpace with size (10, 10), metric=chebyshev and periodic=false\n scheduler: fastest\n properties: min_to_be_happy => 3"
    );
    let bare = grid(2, 2, false);
    assert!(bare.properties.is_empty());
    assert_eq!(bare.step_count(), 0);
}

#[test]
fn fill_and_single_placement() {
    let mut m = grid(10, 10, false);
    assert_eq!(m.fill_space(|_, _| Walker::new(1.0, 0)), 100);
    assert_eq!(m.len(), 100);
    assert_eq!(m.space().empty_positions().len(), 0);
    assert_eq!(m.add_agent_single(Walker::new(1.0, 0)), Err(ModelError::NoEmpty));

    let mut one = grid(1, 1, false);
    one.add_agent_single(Walker::new(1.0, 0)).unwrap();
    assert!(one.space().random_empty(&mut Rng::seed_from_u64(0)).is_none());

    let two = grid(2, 2, false);
    assert_eq!(two.space().empty_positions().len(), 4);
}

#[test]
fn random_placement_follows_rng_stream() {
    let mut m = grid(7, 5, false).with_seed(11);
    let a = m.add_agent_random(Walker::new(0.0, 0));
    let b = m.add_agent_random(Walker::new(0.0, 0));
    let mut rng = Rng::seed_from_u64(11);
    let probe = GridSpace::<2>::new([7, 5], false);
    assert_eq!(*m[a].pos(), probe.random_position(&mut rng));
    assert_eq!(*m[b].pos(), probe.random_position(&mut rng));
    assert_eq!((a, b), (AgentId(1), AgentId(2)));
}

#[test]
fn move_single_behaviour() {
    let mut m = grid(2, 1, false);
    let id = m.add_agent([0, 0], Walker::new(0.0, 0));
    assert!(m.move_agent_single(id));
    assert_eq!(*m[id].pos(), [1, 0]);
    m.move_agent(id, [1, 0]);
    assert_eq!(m.ids_at(&[1, 0]), &[id]);

    let other = m.add_agent([0, 0], Walker::new(0.0, 0));
    assert!(!m.move_agent_single(other));
    assert_eq!(*m[other].pos(), [0, 0]);
}

#[test]
#[should_panic]
fn moving_dead_agent_panics() {
    let mut m = grid(2, 2, false);
    let id = m.add_agent([0, 0], Walker::new(0.0, 0));
    m.kill_agent(id).unwrap();
    m.move_agent(id, [1, 1]);
}

#[test]
fn killing() {
    let mut m = grid(10, 10, false).with_seed(1);
    for i in 0..100 {
        m.add_agent_single(Walker::new(0.0, i % 2)).unwrap();
    }
    assert_eq!(m.kill_by(|_| false), 0);
    let ones = m.agents().filter(|a| a.group == 1).count();
    assert_eq!(m.kill_by(|a| a.group == 1), ones);
    assert_eq!(ones, 50);
    assert!(m.agents().all(|a| a.group == 0));
    assert_eq!(m.kill_agent(AgentId(999)), Err(ModelError::NotFound(AgentId(999))));
    m.kill_all();
    assert_eq!(m.len(), 0);
    assert_eq!(m.space().empty_positions().len(), 100);
}

#[test]
fn sampling() {
    let mut m = grid(3, 3, false);
    m.add_agent([1, 1], Walker::new(4.0, 1));
    m.sample_agents(1, |_| 1.0).unwrap();
    assert_eq!(m.len(), 1);
    let a = m.agents().next().unwrap();
    assert_eq!((a.id(), *a.pos(), a.energy), (AgentId(2), [1, 1], 4.0));

    let mut m = grid(5, 5, false).with_seed(2);
    for i in 0..10 {
        m.add_agent_random(Walker::new(0.0, i % 2));
    }
    m.sample_agents(50, |a| if a.group == 1 { 0.0 } else { 1.0 }).unwrap();
    assert_eq!(m.len(), 50);
    assert!(m.agents().all(|a| a.group == 0));
    assert_eq!(m.sample_agents(3, |_| 0.0), Err(ModelError::DegenerateWeights));
}

#[test]
fn sampling_frequencies_match_weights() {
    // Multinomial oracle: each of 10^4 draws picks source i with p_i = w_i / sum(w).
    let weights = [1.0, 2.0, 3.0, 4.0];
    let total: f64 = weights.iter().sum();
    let mut m = grid(4, 1, false).with_seed(5);
    for (i, _) in weights.iter().enumerate() {
        m.add_agent([i, 0], Walker::new(weights[i], i as i64));
    }
    let n = 10_000;
    m.sample_agents(n, |a| a.energy).unwrap();
    for (i, w) in weights.iter().enumerate() {
        let p = w / total;
        let count = m.agents().filter(|a| a.group == i as i64).count() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((count - n as f64 * p).abs() <= 3.0 * sigma, "group {i}: {count}");
    }
}

#[test]
fn neighborhoods() {
    let m = grid(3, 3, false);
    assert_eq!(m.nearby_positions(&[1, 1], 1.0).len(), 8);
    assert_eq!(m.nearby_positions(&[1, 1], 0.0).len(), 0);
    let t = grid(3, 3, true);
    assert_eq!(t.nearby_positions(&[0, 0], 1.0).len(), 8);

    let mut m = grid(5, 5, false);
    let a = m.add_agent([2, 2], Walker::new(0.0, 0));
    let b = m.add_agent([2, 3], Walker::new(0.0, 0));
    let c = m.add_agent([4, 4], Walker::new(0.0, 0));
    assert_eq!(m.nearby_ids_of(a, 1.0), vec![b]);
    assert_eq!(m.nearby_agents(a, 0.0).count(), 0);
    assert_eq!(m.nearby_ids(&[2, 2], 2.0), vec![a, b, c]);
}

fn energy_fns() -> StepFunctions<Walker, GridSpace<2>, ()> {
    StepFunctions::new()
        .agent(|id, m: &mut Grid2| {
            m[id].energy -= 1.0;
            m.move_agent_single(id);
        })
        .model(|m: &mut Grid2| {
            m.properties.set("ticks", m.properties.int("ticks") + 1);
        })
}

fn seeded(seed: u64) -> Grid2 {
    let mut m = grid(8, 8, false)
        .with_seed(seed)
        .with_properties(Properties::new().with("ticks", 0))
        .with_scheduler(abm::Scheduler::Random);
    for i in 0..20 {
        m.add_agent_single(Walker::new(10.0, i % 3)).unwrap();
    }
    m
}

#[test]
fn stepping_termination() {
    let mut m = seeded(1);
    let before: Vec<_> = m.agents().cloned().collect();
    m.step(&energy_fns(), 0);
    assert_eq!(m.agents().cloned().collect::<Vec<_>>(), before);
    let never = |_: &Grid2, _: u64| true;
    m.step(&energy_fns(), abm::Stop::When(&never));
    assert_eq!(m.properties.int("ticks"), 0);

    let until = |m: &Grid2, _: u64| m.properties.int("ticks") >= 4;
    m.step(&energy_fns(), abm::Stop::When(&until));
    assert_eq!(m.step_count(), 4);
}

#[test]
fn equal_seeds_give_identical_registries() {
    let (mut a, mut b) = (seeded(9), seeded(9));
    a.step(&energy_fns(), 25);
    b.step(&energy_fns(), 25);
    let ra: Vec<_> = a.agents().map(|x| (x.id(), *x.pos(), x.data.clone())).collect();
    let rb: Vec<_> = b.agents().map(|x| (x.id(), *x.pos(), x.data.clone())).collect();
    assert_eq!(ra, rb);
    assert_eq!(a.rng, b.rng);
}

#[test]
fn mid_step_kills_and_births() {
    let activated = Arc::new(Mutex::new(Vec::new()));
    let log = activated.clone();
    let fns = StepFunctions::new().agent(move |id, m: &mut Grid2| {
        log.lock().unwrap().push(id);
        if m[id].group == 0 && m.step_count() == 0 {
            // Kill every other agent and spawn one.
            let others: Vec<AgentId> = m.ids().filter(|o| *o != id).collect();
            for o in others {
                m.kill_agent(o).unwrap();
            }
            m.add_agent([0, 0], Walker::new(0.0, 1));
        }
    });
    let mut m = grid(4, 4, false);
    m.add_agent([1, 1], Walker::new(0.0, 0));
    m.add_agent([2, 2], Walker::new(0.0, 1));
    m.add_agent([3, 3], Walker::new(0.0, 1));
    m.step(&fns, 1);
    assert_eq!(*activated.lock().unwrap(), vec![AgentId(1)]);
    m.step(&fns, 1);
    assert_eq!(*activated.lock().unwrap(), vec![AgentId(1), AgentId(1), AgentId(4)]);
}

#[test]
fn model_step_placement() {
    let order = Arc::new(Mutex::new(String::new()));
    let (o1, o2) = (order.clone(), order.clone());
    let fns = StepFunctions::new()
        .agent(move |_, _: &mut Grid2| o1.lock().unwrap().push('a'))
        .model(move |_: &mut Grid2| o2.lock().unwrap().push('m'));
    let mut m = grid(2, 2, false);
    m.add_agent([0, 0], Walker::new(0.0, 0));
    m.add_agent([1, 0], Walker::new(0.0, 0));
    m.step(&fns, 1);
    assert_eq!(*order.lock().unwrap(), "aam");
    order.lock().unwrap().clear();
    m.step(&fns.clone().model_first(), 1);
    assert_eq!(*order.lock().unwrap(), "maa");
}

/// Registry and space index stay a bijection under 10^4 random operations,
/// and ids are never reused.
#[test]
fn lifecycle_fuzz() {
    let mut m = grid(6, 6, true).with_seed(77);
    let mut rng = Rng::seed_from_u64(1234);
    let mut issued: Vec<AgentId> = Vec::new();
    for _ in 0..10_000 {
        match rng.next_below(6) {
            0 | 1 => issued.push(m.add_agent_random(Walker::new(0.0, 0))),
            2 => {
                if let Ok(id) = m.add_agent_single(Walker::new(0.0, 0)) {
                    issued.push(id);
                }
            }
            3 if !m.is_empty() => {
                let ids: Vec<_> = m.ids().collect();
                let id = ids[rng.index(ids.len())];
                let pos = [rng.index(6), rng.index(6)];
                m.move_agent(id, pos);
            }
            4 if !m.is_empty() => {
                let ids: Vec<_> = m.ids().collect();
                m.kill_agent(ids[rng.index(ids.len())]).unwrap();
            }
            5 if !m.is_empty() => {
                let ids: Vec<_> = m.ids().collect();
                m.move_agent_single(ids[rng.index(ids.len())]);
            }
            _ => {}
        }
        if rng.next_below(50) == 0 {
            m.kill_by(|a| a.id().0 % 3 == 0);
        }
    }
    assert!(issued.windows(2).all(|w| w[0] < w[1]));
    assert!(m.next_id() > issued.last().unwrap().0);

    let mut indexed = BTreeSet::new();
    for pos in m.space().positions() {
        for id in m.ids_at(&pos) {
            assert!(indexed.insert(*id), "{id} indexed twice");
            assert_eq!(*m[*id].pos(), pos);
        }
    }
    assert_eq!(indexed, m.ids().collect::<BTreeSet<_>>());
}
