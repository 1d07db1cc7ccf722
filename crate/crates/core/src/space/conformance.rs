//! Generic conformance battery for [`Space`] implementations.
//!
//! Drives a space exclusively through its five contract methods with a random
//! mix of register / update / unregister operations, keeps a shadow copy of
//! every agent position, and checks each neighbor query against a brute-force
//! filter of the shadow under a caller-supplied distance function.

use std::collections::BTreeMap;

use super::Space;
use crate::agent::AgentId;
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct Battery {
    pub seed: u64,
    /// Number of random mutations.
    pub ops: usize,
    /// Population cap; registration is skipped above it.
    pub max_agents: usize,
    /// Radii sampled for each query.
    pub radii: Vec<f64>,
    /// Neighbor queries issued after every mutation.
    pub queries_per_op: usize,
}

impl Default for Battery {
    fn default() -> Self {
        Battery {
            seed: 0,
            ops: 2_000,
            max_agents: 60,
            radii: vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0],
            queries_per_op: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub registered: usize,
    pub moved: usize,
    pub unregistered: usize,
    pub queries: usize,
}

impl Battery {
    /// Runs the battery. `distance` is the reference metric of the space.
    pub fn run<S, F>(&self, space: &mut S, distance: F) -> Result<Report, String>
    where
        S: Space,
        F: Fn(&S, &S::Pos, &S::Pos) -> f64,
    {
        let mut rng = Rng::seed_from_u64(self.seed);
        let mut shadow: BTreeMap<AgentId, S::Pos> = BTreeMap::new();
        let mut next_id = 1u64;
        let mut report = Report::default();

        for op in 0..self.ops {
            let roll = rng.next_below(10);
            if shadow.is_empty() || (roll < 4 && shadow.len() < self.max_agents) {
                let id = AgentId(next_id);
                next_id += 1;
                let pos = space.random_position(&mut rng);
                space.register_agent(id, &pos);
                shadow.insert(id, pos);
                report.registered += 1;
            } else if roll < 8 {
                let id = *shadow.keys().nth(rng.index(shadow.len())).unwrap();
                let new = space.random_position(&mut rng);
                let old = shadow.insert(id, new.clone()).unwrap();
                space.update_position(id, &old, &new);
                report.moved += 1;
            } else {
                let id = *shadow.keys().nth(rng.index(shadow.len())).unwrap();
                let pos = shadow.remove(&id).unwrap();
                space.unregister_agent(id, &pos);
                report.unregistered += 1;
            }

            for _ in 0..self.queries_per_op {
                let origin = if !shadow.is_empty() && rng.chance(0.5) {
                    shadow.values().nth(rng.index(shadow.len())).unwrap().clone()
                } else {
                    space.random_position(&mut rng)
                };
                let r = self.radii[rng.index(self.radii.len())];
                let mut got = space.neighbor_ids(&origin, r);
                let before = got.len();
                got.sort();
                got.dedup();
                if got.len() != before {
                    return Err(format!("op {op}: duplicate ids in neighbor_ids({origin:?}, {r})"));
                }
                let expect: Vec<AgentId> = shadow
                    .iter()
                    .filter(|(_, p)| distance(space, &origin, p) <= r)
                    .map(|(id, _)| *id)
                    .collect();
                if got != expect {
                    return Err(format!(
                        "op {op}: neighbor_ids({origin:?}, {r}) = {got:?}, brute force = {expect:?}"
                    ));
                }
                report.queries += 1;
            }
        }
        Ok(report)
    }
}
