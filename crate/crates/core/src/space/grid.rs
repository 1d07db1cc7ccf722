use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{insert_sorted, remove_sorted, DiscreteSpace, Space};
use crate::agent::AgentId;
use crate::rng::Rng;

/// Distance used by grid neighbor queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Max of per-axis offsets (Moore neighborhood at r = 1).
    Chebyshev,
    /// Squared center distance `<= r²` (von Neumann neighborhood at r = 1).
    Euclidean,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Chebyshev => "chebyshev",
            Metric::Euclidean => "euclidean",
        }
    }
}

/// N-dimensional rectangular grid of cells indexed `[0, dims[i])` per axis.
///
/// Any number of agents may share a cell. Cells keep their ids sorted so
/// query order is a pure function of the current population.
#[derive(Clone, Debug)]
pub struct GridSpace<const D: usize> {
    dims: [usize; D],
    periodic: bool,
    metric: Metric,
    strides: [usize; D],
    cells: Vec<Vec<AgentId>>,
    empty: usize,
}

impl<const D: usize> GridSpace<D> {
    /// Chebyshev grid. Panics on a zero-sized axis or `D == 0`.
    pub fn new(dims: [usize; D], periodic: bool) -> Self {
        Self::with_metric(dims, periodic, Metric::Chebyshev)
    }

    pub fn with_metric(dims: [usize; D], periodic: bool, metric: Metric) -> Self {
        assert!(D >= 1, "grid needs at least one dimension");
        assert!(dims.iter().all(|&d| d > 0), "grid dimensions must be positive");
        let mut strides = [0; D];
        let mut acc = 1;
        for i in 0..D {
            strides[i] = acc;
            acc *= dims[i];
        }
        GridSpace {
            dims,
            periodic,
            metric,
            strides,
            cells: vec![Vec::new(); acc],
            empty: acc,
        }
    }

    pub fn dims(&self) -> [usize; D] {
        self.dims
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Linear index of `pos` (first axis fastest).
    #[inline]
    pub fn linear_index(&self, pos: &[usize; D]) -> usize {
        pos.iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    pub fn position_of(&self, mut index: usize) -> [usize; D] {
        let mut pos = [0; D];
        for i in 0..D {
            pos[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        pos
    }

    /// Per-axis `(coordinate, signed offset)` pairs reachable within radius `r`.
    fn axis_candidates(&self, axis: usize, p: usize, r: f64) -> Vec<(usize, isize)> {
        let dim = self.dims[axis];
        let k = r.floor() as usize;
        if self.periodic && 2 * k + 1 >= dim {
            // Every coordinate is in reach; use minimal-image offsets.
            (0..dim)
                .map(|c| {
                    let d = (c + dim - p) % dim;
                    let off = if 2 * d > dim { d as isize - dim as isize } else { d as isize };
                    (c, off)
                })
                .collect()
        } else {
            let k = k as isize;
            (-k..=k)
                .filter_map(|o| {
                    let c = p as isize + o;
                    if self.periodic {
                        Some((c.rem_euclid(dim as isize) as usize, o))
                    } else if c >= 0 && (c as usize) < dim {
                        Some((c as usize, o))
                    } else {
                        None
                    }
                })
                .collect()
        }
    }

    /// Visits every cell within distance `r` of `pos`.
    fn for_each_within(
        &self,
        pos: &[usize; D],
        r: f64,
        include_origin: bool,
        mut visit: impl FnMut(usize, [usize; D]),
    ) {
        assert!(r >= 0.0, "neighbor radius must be non-negative");
        let axes: Vec<Vec<(usize, isize)>> =
            (0..D).map(|i| self.axis_candidates(i, pos[i], r)).collect();
        if axes.iter().any(|a| a.is_empty()) {
            return;
        }
        let r2 = r * r;
        let mut cursor = [0usize; D];
        loop {
            let mut cell = [0usize; D];
            let mut cheb = 0usize;
            let mut sq = 0f64;
            let mut origin = true;
            for i in 0..D {
                let (c, o) = axes[i][cursor[i]];
                cell[i] = c;
                let a = o.unsigned_abs();
                cheb = cheb.max(a);
                sq += (a * a) as f64;
                origin &= o == 0;
            }
            let inside = match self.metric {
                Metric::Chebyshev => cheb as f64 <= r,
                Metric::Euclidean => sq <= r2,
            };
            if inside && (include_origin || !origin) {
                visit(self.linear_index(&cell), cell);
            }
            // odometer increment
            let mut i = 0;
            loop {
                if i == D {
                    return;
                }
                cursor[i] += 1;
                if cursor[i] < axes[i].len() {
                    break;
                }
                cursor[i] = 0;
                i += 1;
            }
        }
    }

    #[inline]
    fn check(&self, pos: &[usize; D]) {
        assert!(self.is_valid(pos), "position {pos:?} outside grid {:?}", self.dims);
    }
}

impl<const D: usize> Space for GridSpace<D> {
    type Pos = [usize; D];

    fn register_agent(&mut self, id: AgentId, pos: &[usize; D]) {
        self.check(pos);
        let i = self.linear_index(pos);
        if self.cells[i].is_empty() {
            self.empty -= 1;
        }
        insert_sorted(&mut self.cells[i], id);
    }

    fn unregister_agent(&mut self, id: AgentId, pos: &[usize; D]) {
        let i = self.linear_index(pos);
        remove_sorted(&mut self.cells[i], id);
        if self.cells[i].is_empty() {
            self.empty += 1;
        }
    }

    fn update_position(&mut self, id: AgentId, old: &[usize; D], new: &[usize; D]) {
        if old != new {
            self.unregister_agent(id, old);
            self.register_agent(id, new);
        }
    }

    fn neighbor_ids(&self, pos: &[usize; D], r: f64) -> Vec<AgentId> {
        let mut out = Vec::new();
        self.for_each_within(pos, r, true, |i, _| out.extend_from_slice(&self.cells[i]));
        out
    }

    fn random_position(&self, rng: &mut Rng) -> [usize; D] {
        let mut pos = [0; D];
        for (p, &d) in pos.iter_mut().zip(&self.dims) {
            *p = rng.index(d);
        }
        pos
    }

    fn is_valid(&self, pos: &[usize; D]) -> bool {
        pos.iter().zip(&self.dims).all(|(p, d)| p < d)
    }

    fn describe(&self) -> String {
        let size: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!(
            "GridSpace with size ({}), metric={} and periodic={}",
            size.join(", "),
            self.metric.name(),
            self.periodic
        )
    }
}

impl<const D: usize> DiscreteSpace for GridSpace<D> {
    fn positions(&self) -> Vec<[usize; D]> {
        (0..self.cells.len()).map(|i| self.position_of(i)).collect()
    }

    fn ids_at(&self, pos: &[usize; D]) -> &[AgentId] {
        &self.cells[self.linear_index(pos)]
    }

    fn neighbor_positions(&self, pos: &[usize; D], r: f64) -> Vec<[usize; D]> {
        let mut out = Vec::new();
        self.for_each_within(pos, r, false, |_, p| out.push(p));
        out
    }

    fn empty_count(&self) -> usize {
        self.empty
    }

    fn position_count(&self) -> usize {
        self.cells.len()
    }

    fn empty_positions(&self) -> Vec<[usize; D]> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(i, _)| self.position_of(i))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct GridConfig {
    dims: Vec<usize>,
    metric: Metric,
    periodic: bool,
}

impl<const D: usize> Serialize for GridSpace<D> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        GridConfig {
            dims: self.dims.to_vec(),
            metric: self.metric,
            periodic: self.periodic,
        }
        .serialize(s)
    }
}

impl<'de, const D: usize> Deserialize<'de> for GridSpace<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        use serde::de::Error;
        let cfg = GridConfig::deserialize(d)?;
        let dims: [usize; D] = cfg
            .dims
            .try_into()
            .map_err(|_| De::Error::custom(format!("expected {D} grid dimensions")))?;
        if dims.contains(&0) {
            return Err(De::Error::custom("grid dimensions must be positive"));
        }
        Ok(GridSpace::with_metric(dims, cfg.periodic, cfg.metric))
    }
}
