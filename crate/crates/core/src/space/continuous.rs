use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Space;
use crate::agent::AgentId;
use crate::rng::Rng;

/// Continuous box `[0, extent_i)` with a uniform bucket index.
///
/// Each bucket holds `(id, position)` entries sorted by id. A radius query
/// scans the buckets within `floor(r / cell) + 1` cells on every axis and
/// keeps entries whose squared (minimal-image, when periodic) distance is
/// `<= r²`, so results never depend on `spacing`.
#[derive(Clone, Debug)]
pub struct ContinuousSpace<const D: usize> {
    extent: [f64; D],
    periodic: bool,
    spacing: f64,
    cells_per_axis: [usize; D],
    cell_size: [f64; D],
    strides: [usize; D],
    buckets: Vec<Vec<(AgentId, [f64; D])>>,
}

impl<const D: usize> ContinuousSpace<D> {
    /// Space with the default bucket size `min(extent) / 20`.
    pub fn new(extent: [f64; D], periodic: bool) -> Self {
        let min = extent.iter().copied().fold(f64::INFINITY, f64::min);
        Self::with_spacing(extent, periodic, min / 20.0)
    }

    pub fn with_spacing(extent: [f64; D], periodic: bool, spacing: f64) -> Self {
        assert!(D >= 1, "continuous space needs at least one dimension");
        assert!(
            extent.iter().all(|e| e.is_finite() && *e > 0.0),
            "extent must be positive"
        );
        assert!(spacing.is_finite() && spacing > 0.0, "spacing must be positive");
        let mut cells_per_axis = [0; D];
        let mut cell_size = [0.0; D];
        let mut strides = [0; D];
        let mut total = 1usize;
        for i in 0..D {
            let n = ((extent[i] / spacing).ceil() as usize).max(1);
            cells_per_axis[i] = n;
            // Periodic buckets tile the extent exactly so wrap-around neighbors
            // are at most as far in cells as they are in space.
            cell_size[i] = if periodic { extent[i] / n as f64 } else { spacing };
            strides[i] = total;
            total *= n;
        }
        ContinuousSpace {
            extent,
            periodic,
            spacing,
            cells_per_axis,
            cell_size,
            strides,
            buckets: vec![Vec::new(); total],
        }
    }

    pub fn extent(&self) -> [f64; D] {
        self.extent
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    fn cell_coord(&self, pos: &[f64; D]) -> [usize; D] {
        let mut c = [0; D];
        for i in 0..D {
            let k = (pos[i] / self.cell_size[i]).floor();
            c[i] = (k.max(0.0) as usize).min(self.cells_per_axis[i] - 1);
        }
        c
    }

    fn bucket_of(&self, pos: &[f64; D]) -> usize {
        let c = self.cell_coord(pos);
        c.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Squared distance between two positions (minimal image when periodic).
    pub fn distance_squared(&self, a: &[f64; D], b: &[f64; D]) -> f64 {
        let mut sq = 0.0;
        for i in 0..D {
            let mut d = (a[i] - b[i]).abs();
            if self.periodic {
                d = d.min(self.extent[i] - d);
            }
            sq += d * d;
        }
        sq
    }

    /// Displacement `to - from`, shortest across the seam when periodic.
    pub fn displacement(&self, from: &[f64; D], to: &[f64; D]) -> [f64; D] {
        let mut out = [0.0; D];
        for i in 0..D {
            let mut d = to[i] - from[i];
            if self.periodic {
                let e = self.extent[i];
                if d > e / 2.0 {
                    d -= e;
                } else if d < -e / 2.0 {
                    d += e;
                }
            }
            out[i] = d;
        }
        out
    }

    fn axis_cells(&self, axis: usize, center: usize, r: f64) -> Vec<usize> {
        let n = self.cells_per_axis[axis];
        let k = (r / self.cell_size[axis]).floor() as usize + 1;
        if self.periodic {
            if 2 * k + 1 >= n {
                (0..n).collect()
            } else {
                (0..=2 * k).map(|j| (center + n + j - k) % n).collect()
            }
        } else {
            let lo = center.saturating_sub(k);
            let hi = (center + k).min(n - 1);
            (lo..=hi).collect()
        }
    }
}

impl<const D: usize> Space for ContinuousSpace<D> {
    type Pos = [f64; D];

    fn register_agent(&mut self, id: AgentId, pos: &[f64; D]) {
        assert!(self.is_valid(pos), "position {pos:?} outside extent {:?}", self.extent);
        let b = self.bucket_of(pos);
        let bucket = &mut self.buckets[b];
        match bucket.binary_search_by_key(&id, |e| e.0) {
            Ok(_) => panic!("agent {id} indexed twice"),
            Err(i) => bucket.insert(i, (id, *pos)),
        }
    }

    fn unregister_agent(&mut self, id: AgentId, pos: &[f64; D]) {
        let b = self.bucket_of(pos);
        let bucket = &mut self.buckets[b];
        let i = bucket
            .binary_search_by_key(&id, |e| e.0)
            .unwrap_or_else(|_| panic!("agent {id} is not indexed at {pos:?}"));
        bucket.remove(i);
    }

    fn update_position(&mut self, id: AgentId, old: &[f64; D], new: &[f64; D]) {
        let (from, to) = (self.bucket_of(old), self.bucket_of(new));
        if from == to {
            let bucket = &mut self.buckets[from];
            let i = bucket
                .binary_search_by_key(&id, |e| e.0)
                .unwrap_or_else(|_| panic!("agent {id} is not indexed at {old:?}"));
            bucket[i].1 = *new;
        } else {
            self.unregister_agent(id, old);
            self.register_agent(id, new);
        }
    }

    fn neighbor_ids(&self, pos: &[f64; D], r: f64) -> Vec<AgentId> {
        assert!(r >= 0.0, "neighbor radius must be non-negative");
        let center = self.cell_coord(pos);
        let axes: Vec<Vec<usize>> = (0..D).map(|i| self.axis_cells(i, center[i], r)).collect();
        let r2 = r * r;
        let mut out = Vec::new();
        let mut cursor = [0usize; D];
        loop {
            let b: usize = (0..D).map(|i| axes[i][cursor[i]] * self.strides[i]).sum();
            for (id, p) in &self.buckets[b] {
                if self.distance_squared(pos, p) <= r2 {
                    out.push(*id);
                }
            }
            let mut i = 0;
            loop {
                if i == D {
                    // Ascending ids, so results do not depend on the bucket layout.
                    out.sort_unstable();
                    return out;
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

    fn random_position(&self, rng: &mut Rng) -> [f64; D] {
        let mut p = [0.0; D];
        for i in 0..D {
            p[i] = rng.next_float() * self.extent[i];
            if p[i] >= self.extent[i] {
                p[i] = 0.0;
            }
        }
        p
    }

    fn is_valid(&self, pos: &[f64; D]) -> bool {
        pos.iter()
            .zip(&self.extent)
            .all(|(p, e)| p.is_finite() && *p >= 0.0 && p < e)
    }

    /// Wraps into `[0, extent)` when periodic; non-periodic positions are
    /// returned unchanged (and rejected by `is_valid` if outside).
    fn normalize(&self, mut pos: [f64; D]) -> [f64; D] {
        if self.periodic {
            for i in 0..D {
                let e = self.extent[i];
                let mut x = pos[i].rem_euclid(e);
                if x >= e {
                    x = 0.0;
                }
                pos[i] = x;
            }
        }
        pos
    }

    fn describe(&self) -> String {
        let ext: Vec<String> = self.extent.iter().map(|e| format!("{e:?}")).collect();
        format!(
            "ContinuousSpace with extent ({}), spacing={:?} and periodic={}",
            ext.join(", "),
            self.spacing,
            self.periodic
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ContinuousConfig {
    extent: Vec<f64>,
    periodic: bool,
    spacing: f64,
}

impl<const D: usize> Serialize for ContinuousSpace<D> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        ContinuousConfig {
            extent: self.extent.to_vec(),
            periodic: self.periodic,
            spacing: self.spacing,
        }
        .serialize(s)
    }
}

impl<'de, const D: usize> Deserialize<'de> for ContinuousSpace<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        use serde::de::Error;
        let cfg = ContinuousConfig::deserialize(d)?;
        let extent: [f64; D] = cfg
            .extent
            .try_into()
            .map_err(|_| De::Error::custom(format!("expected {D} extents")))?;
        if !extent.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(De::Error::custom("extent must be positive"));
        }
        if !(cfg.spacing.is_finite() && cfg.spacing > 0.0) {
            return Err(De::Error::custom("spacing must be positive"));
        }
        Ok(ContinuousSpace::with_spacing(extent, cfg.periodic, cfg.spacing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(points: &[(AgentId, [f64; 2])], extent: [f64; 2], periodic: bool, q: [f64; 2], r: f64) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = points
            .iter()
            .filter(|(_, p)| {
                let mut sq = 0.0;
                for i in 0..2 {
                    let raw = (p[i] - q[i]).abs();
                    let d = if periodic { raw.min(extent[i] - raw) } else { raw };
                    sq += d * d;
                }
                sq <= r * r
            })
            .map(|(id, _)| *id)
            .collect();
        out.sort();
        out
    }

    #[test]
    fn inclusive_boundary() {
        let mut s = ContinuousSpace::new([10.0, 10.0], false);
        s.register_agent(AgentId(1), &[2.0, 2.0]);
        s.register_agent(AgentId(2), &[3.0, 2.0]);
        assert_eq!(s.neighbor_ids(&[2.0, 2.0], 1.0), vec![AgentId(1), AgentId(2)]);
    }

    #[test]
    fn neighbors_across_the_seam() {
        let mut s = ContinuousSpace::new([10.0, 10.0], true);
        s.register_agent(AgentId(1), &[0.1, 5.0]);
        s.register_agent(AgentId(2), &[9.9, 5.0]);
        let mut ids = s.neighbor_ids(&[0.1, 5.0], 0.5);
        ids.sort();
        assert_eq!(ids, vec![AgentId(1), AgentId(2)]);
        assert!((s.displacement(&[9.9, 5.0], &[0.1, 5.0])[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn normalize_wraps_and_never_returns_extent() {
        let s = ContinuousSpace::new([10.0, 10.0], true);
        assert_eq!(s.normalize([10.5, -0.5]), [0.5, 9.5]);
        let w = s.normalize([-1e-18, 3.0]);
        assert!(s.is_valid(&w));
    }

    #[test]
    fn spacing_is_only_a_performance_knob() {
        let mut rng = Rng::seed_from_u64(9);
        for periodic in [false, true] {
            let extent = [10.0, 7.0];
            let points: Vec<(AgentId, [f64; 2])> = (1..=150)
                .map(|i| (AgentId(i), [rng.uniform(0.0, 10.0), rng.uniform(0.0, 7.0)]))
                .collect();
            let spaces: Vec<ContinuousSpace<2>> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&sp| {
                    let mut s = ContinuousSpace::with_spacing(extent, periodic, sp);
                    for (id, p) in &points {
                        s.register_agent(*id, p);
                    }
                    s
                })
                .collect();
            for _ in 0..50 {
                let q = [rng.uniform(0.0, 10.0), rng.uniform(0.0, 7.0)];
                let r = rng.uniform(0.0, 4.0);
                let expect = brute(&points, extent, periodic, q, r);
                for s in &spaces {
                    let mut got = s.neighbor_ids(&q, r);
                    got.sort();
                    assert_eq!(got, expect);
                }
            }
        }
    }

    #[test]
    fn update_within_and_across_buckets() {
        let mut s = ContinuousSpace::with_spacing([4.0], false, 1.0);
        s.register_agent(AgentId(1), &[0.2]);
        s.update_position(AgentId(1), &[0.2], &[0.7]);
        assert_eq!(s.neighbor_ids(&[0.7], 0.0), vec![AgentId(1)]);
        s.update_position(AgentId(1), &[0.7], &[3.5]);
        assert!(s.neighbor_ids(&[0.7], 1.0).is_empty());
        assert_eq!(s.neighbor_ids(&[3.0], 0.5), vec![AgentId(1)]);
    }
}
