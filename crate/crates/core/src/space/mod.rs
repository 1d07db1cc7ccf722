//! Spaces agents live in.
//!
//! A space is anything implementing the five methods of [`Space`]; the model
//! drives them and every higher level operation (adding, moving, killing,
//! neighbor queries, checkpointing of agents) works unchanged on top. Spaces
//! with a finite set of positions additionally implement [`DiscreteSpace`],
//! which unlocks emptiness queries, `add_agent_single`, `fill_space` and
//! `move_agent_single`.
//!
//! Neighbor radii are inclusive everywhere: an id is a neighbor of `pos` when
//! its position lies at distance `<= r`. Agents sharing the query position are
//! at distance zero.

use std::fmt::Debug;

use crate::agent::AgentId;
use crate::rng::Rng;

pub mod conformance;
mod continuous;
mod graph;
mod grid;

pub use continuous::ContinuousSpace;
pub use graph::{GraphError, GraphSpace};
pub use grid::{GridSpace, Metric};

/// The contract every space implements.
pub trait Space {
    type Pos: Clone + PartialEq + Debug;

    /// Index `id` at `pos`.
    fn register_agent(&mut self, id: AgentId, pos: &Self::Pos);

    /// Remove `id` from its index entry at `pos`.
    fn unregister_agent(&mut self, id: AgentId, pos: &Self::Pos);

    /// Re-index `id` after a move from `old` to `new`.
    fn update_position(&mut self, id: AgentId, old: &Self::Pos, new: &Self::Pos);

    /// Ids of all agents at distance `<= r` from `pos`, in a deterministic order.
    fn neighbor_ids(&self, pos: &Self::Pos, r: f64) -> Vec<AgentId>;

    /// A uniformly random valid position.
    fn random_position(&self, rng: &mut Rng) -> Self::Pos;

    /// Whether `pos` may hold an agent. Defaults to every position.
    fn is_valid(&self, _pos: &Self::Pos) -> bool {
        true
    }

    /// Canonical form of a position (periodic wrapping). Defaults to identity.
    fn normalize(&self, pos: Self::Pos) -> Self::Pos {
        pos
    }

    fn describe(&self) -> String {
        let full = std::any::type_name::<Self>();
        full.rsplit("::").next().unwrap_or(full).to_string()
    }
}

/// Spaces whose positions can be enumerated.
pub trait DiscreteSpace: Space {
    /// All valid positions in a deterministic order.
    fn positions(&self) -> Vec<Self::Pos>;

    /// Agents currently indexed at `pos`, ascending id.
    fn ids_at(&self, pos: &Self::Pos) -> &[AgentId];

    /// Positions at distance `1..=r` from `pos` (the origin is excluded).
    fn neighbor_positions(&self, pos: &Self::Pos, r: f64) -> Vec<Self::Pos>;

    fn is_empty(&self, pos: &Self::Pos) -> bool {
        self.ids_at(pos).is_empty()
    }

    /// Number of unoccupied positions.
    fn empty_count(&self) -> usize {
        self.positions().iter().filter(|p| self.is_empty(p)).count()
    }

    fn position_count(&self) -> usize {
        self.positions().len()
    }

    fn empty_positions(&self) -> Vec<Self::Pos> {
        self.positions()
            .into_iter()
            .filter(|p| self.is_empty(p))
            .collect()
    }

    /// A uniformly random empty position, `None` when the space is full.
    ///
    /// When at least an eighth of the positions are empty this rejection
    /// samples `random_position` (up to 64 draws); otherwise, or when every
    /// draw hits an occupied position, it enumerates the empty positions and
    /// picks one with `next_below`.
    fn random_empty(&self, rng: &mut Rng) -> Option<Self::Pos> {
        let empty = self.empty_count();
        if empty == 0 {
            return None;
        }
        if empty * 8 >= self.position_count() {
            for _ in 0..64 {
                let p = self.random_position(rng);
                if self.is_empty(&p) {
                    return Some(p);
                }
            }
        }
        let candidates = self.empty_positions();
        let i = rng.index(candidates.len());
        Some(candidates[i].clone())
    }
}

/// Inserts into a vector kept in ascending order.
pub(crate) fn insert_sorted(ids: &mut Vec<AgentId>, id: AgentId) {
    match ids.binary_search(&id) {
        Ok(_) => debug_assert!(false, "agent {id} indexed twice"),
        Err(i) => ids.insert(i, id),
    }
}

pub(crate) fn remove_sorted(ids: &mut Vec<AgentId>, id: AgentId) {
    match ids.binary_search(&id) {
        Ok(i) => {
            ids.remove(i);
        }
        Err(_) => panic!("agent {id} is not indexed at the given position"),
    }
}
