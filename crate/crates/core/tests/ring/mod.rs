//! A space written against the contract alone: sites on a ring of length
//! `n`, distance is the shorter way round.

use abm::{AgentId, Rng, Space};

#[derive(Clone, Debug)]
pub struct Ring {
    sites: Vec<Vec<AgentId>>,
}

impl Ring {
    pub fn new(n: usize) -> Self {
        Ring { sites: vec![Vec::new(); n] }
    }

    pub fn distance(&self, a: &usize, b: &usize) -> f64 {
        let d = a.abs_diff(*b);
        d.min(self.sites.len() - d) as f64
    }
}

impl Space for Ring {
    type Pos = usize;

    fn register_agent(&mut self, id: AgentId, pos: &usize) {
        let site = &mut self.sites[*pos];
        let at = site.binary_search(&id).unwrap_err();
        site.insert(at, id);
    }

    fn unregister_agent(&mut self, id: AgentId, pos: &usize) {
        let site = &mut self.sites[*pos];
        let at = site.binary_search(&id).expect("agent not on site");
        site.remove(at);
    }

    fn update_position(&mut self, id: AgentId, old: &usize, new: &usize) {
        self.unregister_agent(id, old);
        self.register_agent(id, new);
    }

    fn neighbor_ids(&self, pos: &usize, r: f64) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = (0..self.sites.len())
            .filter(|s| self.distance(pos, s) <= r)
            .flat_map(|s| self.sites[s].iter().copied())
            .collect();
        out.sort();
        out
    }

    fn random_position(&self, rng: &mut Rng) -> usize {
        rng.index(self.sites.len())
    }

    fn is_valid(&self, pos: &usize) -> bool {
        *pos < self.sites.len()
    }

    fn normalize(&self, pos: usize) -> usize {
        pos % self.sites.len()
    }
}
