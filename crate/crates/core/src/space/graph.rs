use std::collections::VecDeque;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{insert_sorted, remove_sorted, DiscreteSpace, Space};
use crate::agent::AgentId;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("node {0} is occupied by agents and cannot be removed")]
    OccupiedNode(usize),
}

#[derive(Clone, Debug, Default)]
struct Node {
    out: Vec<usize>,
    agents: Vec<AgentId>,
}

/// Mutable directed graph; agents sit on nodes.
///
/// Node indices are stable: removing a node leaves a hole rather than
/// renumbering. Distance is the directed hop count along out-edges, so
/// `neighbor_ids(n, 1)` covers agents on `n` and its out-neighbors. An
/// undirected graph is a graph with symmetric edge pairs.
#[derive(Clone, Debug, Default)]
pub struct GraphSpace {
    nodes: Vec<Option<Node>>,
    live: Vec<usize>,
}

impl GraphSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph with `n` nodes and no edges.
    pub fn with_nodes(n: usize) -> Self {
        let mut g = Self::new();
        for _ in 0..n {
            g.add_node();
        }
        g
    }

    /// Directed path `0 → 1 → … → n-1`.
    pub fn path(n: usize) -> Self {
        let mut g = Self::with_nodes(n);
        for i in 1..n {
            g.add_edge(i - 1, i).unwrap();
        }
        g
    }

    pub fn add_node(&mut self) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(Some(Node::default()));
        self.live.push(idx);
        idx
    }

    /// Removes an empty node and every edge touching it.
    pub fn remove_node(&mut self, node: usize) -> Result<(), GraphError> {
        let n = self.node(node)?;
        if !n.agents.is_empty() {
            return Err(GraphError::OccupiedNode(node));
        }
        self.nodes[node] = None;
        for other in self.nodes.iter_mut().flatten() {
            if let Ok(i) = other.out.binary_search(&node) {
                other.out.remove(i);
            }
        }
        let i = self.live.binary_search(&node).expect("live list out of sync");
        self.live.remove(i);
        Ok(())
    }

    /// Adds the directed edge `from → to`. Adding an existing edge is a no-op.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.node(to)?;
        let out = &mut self.node_mut(from)?.out;
        if let Err(i) = out.binary_search(&to) {
            out.insert(i, to);
        }
        Ok(())
    }

    pub fn add_undirected_edge(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        self.add_edge(a, b)?;
        self.add_edge(b, a)
    }

    /// Removes `from → to`; returns whether the edge existed.
    pub fn remove_edge(&mut self, from: usize, to: usize) -> Result<bool, GraphError> {
        self.node(to)?;
        let out = &mut self.node_mut(from)?.out;
        Ok(match out.binary_search(&to) {
            Ok(i) => {
                out.remove(i);
                true
            }
            Err(_) => false,
        })
    }

    pub fn has_node(&self, node: usize) -> bool {
        matches!(self.nodes.get(node), Some(Some(_)))
    }

    pub fn node_count(&self) -> usize {
        self.live.len()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.live
    }

    pub fn out_neighbors(&self, node: usize) -> Result<&[usize], GraphError> {
        Ok(&self.node(node)?.out)
    }

    /// All edges as `(from, to)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.live
            .iter()
            .flat_map(|&a| self.nodes[a].as_ref().unwrap().out.iter().map(move |&b| (a, b)))
            .collect()
    }

    fn node(&self, node: usize) -> Result<&Node, GraphError> {
        self.nodes
            .get(node)
            .and_then(Option::as_ref)
            .ok_or(GraphError::UnknownNode(node))
    }

    fn node_mut(&mut self, node: usize) -> Result<&mut Node, GraphError> {
        self.nodes
            .get_mut(node)
            .and_then(Option::as_mut)
            .ok_or(GraphError::UnknownNode(node))
    }

    /// Nodes within `hops` of `start` in BFS order, paired with their distance.
    fn bfs(&self, start: usize, hops: usize) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = vec![(start, 0)];
        seen[start] = true;
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((n, d)) = queue.pop_front() {
            if d == hops {
                continue;
            }
            for &m in &self.nodes[n].as_ref().unwrap().out {
                if !seen[m] {
                    seen[m] = true;
                    order.push((m, d + 1));
                    queue.push_back((m, d + 1));
                }
            }
        }
        order
    }

    fn hops(r: f64) -> usize {
        assert!(r >= 0.0, "neighbor radius must be non-negative");
        r.floor() as usize
    }
}

impl Space for GraphSpace {
    type Pos = usize;

    fn register_agent(&mut self, id: AgentId, pos: &usize) {
        let node = self
            .node_mut(*pos)
            .unwrap_or_else(|e| panic!("cannot place agent {id}: {e}"));
        insert_sorted(&mut node.agents, id);
    }

    fn unregister_agent(&mut self, id: AgentId, pos: &usize) {
        let node = self.node_mut(*pos).expect("agent on a missing node");
        remove_sorted(&mut node.agents, id);
    }

    fn update_position(&mut self, id: AgentId, old: &usize, new: &usize) {
        if old != new {
            self.unregister_agent(id, old);
            self.register_agent(id, new);
        }
    }

    fn neighbor_ids(&self, pos: &usize, r: f64) -> Vec<AgentId> {
        self.bfs(*pos, Self::hops(r))
            .into_iter()
            .flat_map(|(n, _)| self.nodes[n].as_ref().unwrap().agents.iter().copied())
            .collect()
    }

    /// Uniform over existing nodes. Panics on an empty graph.
    fn random_position(&self, rng: &mut Rng) -> usize {
        assert!(!self.live.is_empty(), "graph has no nodes");
        self.live[rng.index(self.live.len())]
    }

    fn is_valid(&self, pos: &usize) -> bool {
        self.has_node(*pos)
    }

    fn describe(&self) -> String {
        format!(
            "GraphSpace with {} nodes and {} edges",
            self.live.len(),
            self.edges().len()
        )
    }
}

impl DiscreteSpace for GraphSpace {
    fn positions(&self) -> Vec<usize> {
        self.live.clone()
    }

    fn ids_at(&self, pos: &usize) -> &[AgentId] {
        &self.node(*pos).expect("query on a missing node").agents
    }

    fn neighbor_positions(&self, pos: &usize, r: f64) -> Vec<usize> {
        self.bfs(*pos, Self::hops(r))
            .into_iter()
            .filter(|&(_, d)| d > 0)
            .map(|(n, _)| n)
            .collect()
    }

    fn position_count(&self) -> usize {
        self.live.len()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphConfig {
    slots: usize,
    nodes: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Serialize for GraphSpace {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        GraphConfig {
            slots: self.nodes.len(),
            nodes: self.live.clone(),
            edges: self.edges(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GraphSpace {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        use serde::de::Error;
        let cfg = GraphConfig::deserialize(d)?;
        let mut g = GraphSpace {
            nodes: vec![None; cfg.slots],
            live: Vec::new(),
        };
        for &n in &cfg.nodes {
            if n >= cfg.slots || g.nodes[n].is_some() {
                return Err(De::Error::custom(format!("invalid node index {n}")));
            }
            g.nodes[n] = Some(Node::default());
        }
        g.live = cfg.nodes;
        g.live.sort_unstable();
        for (a, b) in cfg.edges {
            g.add_edge(a, b).map_err(De::Error::custom)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_hop_path_query() {
        let mut g = GraphSpace::path(3);
        g.register_agent(AgentId(1), &2);
        assert!(g.neighbor_ids(&0, 1.0).is_empty());
        assert_eq!(g.neighbor_ids(&0, 2.0), vec![AgentId(1)]);
        assert!(g.neighbor_ids(&0, 0.0).is_empty());
        g.remove_edge(1, 2).unwrap();
        assert!(g.neighbor_ids(&0, 2.0).is_empty());
    }

    #[test]
    fn edges_are_directed() {
        let mut g = GraphSpace::path(2);
        g.register_agent(AgentId(7), &0);
        assert!(g.neighbor_ids(&1, 1.0).is_empty());
        assert_eq!(g.neighbor_positions(&0, 1.0), vec![1]);
    }

    #[test]
    fn node_removal_policy() {
        let mut g = GraphSpace::path(3);
        g.register_agent(AgentId(1), &1);
        assert_eq!(g.remove_node(1), Err(GraphError::OccupiedNode(1)));
        g.unregister_agent(AgentId(1), &1);
        g.remove_node(1).unwrap();
        assert_eq!(g.nodes(), &[0, 2]);
        assert!(g.edges().is_empty());
        assert_eq!(g.add_edge(0, 1), Err(GraphError::UnknownNode(1)));
        assert_eq!(g.remove_node(9), Err(GraphError::UnknownNode(9)));
        let n = g.add_node();
        assert_eq!(n, 3);
    }

    #[test]
    fn emptiness_queries() {
        let mut g = GraphSpace::with_nodes(1);
        assert_eq!(g.empty_positions(), vec![0]);
        g.register_agent(AgentId(1), &0);
        assert_eq!(g.random_empty(&mut Rng::seed_from_u64(1)), None);
    }

    #[test]
    fn topology_round_trip() {
        let mut g = GraphSpace::path(4);
        g.add_edge(3, 0).unwrap();
        g.remove_node(1).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: GraphSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back.nodes(), g.nodes());
        assert_eq!(back.edges(), g.edges());
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
