//! Small-world trading network: a square lattice whose short-range links are
//! rewired Watts-Strogatz style.
//!
//! Node ids are row-major grid coordinates (`id = row * n_side + col`).
//! Adjacency lists are kept sorted ascending; the cascade order in
//! [`crate::information`] depends on it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Config(format!("unknown boundary mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    n_side: usize,
    boundary: Boundary,
    rewire_prob: f64,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RewireReport {
    /// Edges that had an endpoint moved.
    pub rewired: usize,
    /// Edges selected for rewiring that had no legal target and were left in place.
    pub stuck: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

/// Open-boundary square lattice with von Neumann neighborhoods.
pub fn build_regular_lattice(n_side: usize) -> Result<NetworkTopology> {
    build_lattice(n_side, Boundary::Open)
}

pub fn build_lattice(n_side: usize, boundary: Boundary) -> Result<NetworkTopology> {
    let min_side = match boundary {
        Boundary::Open => 2,
        // a 2-wide torus would link each node to the same neighbor twice
        Boundary::Periodic => 3,
    };
    if n_side < min_side {
        return Err(Error::InvalidSize(format!(
            "{} lattice needs n_side >= {min_side}, got {n_side}",
            boundary.as_str()
        )));
    }
    let n = n_side * n_side;
    let mut adjacency = vec![Vec::with_capacity(4); n];
    let mut edge_count = 0;
    for row in 0..n_side {
        for col in 0..n_side {
            let id = row * n_side + col;
            let right = match boundary {
                Boundary::Open if col + 1 < n_side => Some(id + 1),
                Boundary::Open => None,
                Boundary::Periodic => Some(row * n_side + (col + 1) % n_side),
            };
            let down = match boundary {
                Boundary::Open if row + 1 < n_side => Some(id + n_side),
                Boundary::Open => None,
                Boundary::Periodic => Some(((row + 1) % n_side) * n_side + col),
            };
            for other in [right, down].into_iter().flatten() {
                adjacency[id].push(other);
                adjacency[other].push(id);
                edge_count += 1;
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(NetworkTopology {
        n_side,
        boundary,
        rewire_prob: 0.0,
        adjacency,
        edge_count,
    })
}

/// Draws consumed by rewiring. [`RandomSource`] is the production implementation;
/// tests substitute scripted draws.
pub(crate) trait RewireDraws {
    fn chance(&mut self, p: f64) -> bool;
    fn node(&mut self, n: usize) -> usize;
}

impl RewireDraws for RandomSource {
    fn chance(&mut self, p: f64) -> bool {
        RandomSource::chance(self, p)
    }

    fn node(&mut self, n: usize) -> usize {
        self.index(n)
    }
}

impl NetworkTopology {
    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn rewire_prob(&self) -> f64 {
        self.rewire_prob
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.adjacency[id].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (i, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Each edge is visited once in `(i, j)` order; with probability `p` the
    /// endpoint `j` is released and `i` is reconnected to a uniformly drawn node
    /// that is neither `i` nor already adjacent to `i`.
    pub fn rewire(&self, p: f64, source: &mut RandomSource) -> Result<(NetworkTopology, RewireReport)> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "rewire probability must lie in [0, 1], got {p}"
            )));
        }
        let order = self.edges();
        Ok(self.rewire_in_order(&order, p, source))
    }

    pub(crate) fn rewire_in_order(
        &self,
        order: &[(usize, usize)],
        p: f64,
        draws: &mut impl RewireDraws,
    ) -> (NetworkTopology, RewireReport) {
        let mut out = self.clone();
        out.rewire_prob = p;
        let n = out.node_count();
        let mut report = RewireReport::default();
        let mut tried = vec![false; n];
        for &(keep, release) in order {
            if !draws.chance(p) {
                continue;
            }
            if !out.has_edge(keep, release) {
                continue;
            }
            tried.iter_mut().for_each(|t| *t = false);
            let mut distinct = 0;
            let target = loop {
                if distinct == n {
                    break None;
                }
                let cand = draws.node(n);
                if !tried[cand] {
                    tried[cand] = true;
                    distinct += 1;
                }
                if cand != keep && !out.has_edge(keep, cand) {
                    break Some(cand);
                }
            };
            match target {
                Some(t) => {
                    out.remove_edge(keep, release);
                    out.insert_edge(keep, t);
                    report.rewired += 1;
                }
                None => {
                    log::warn!("no legal rewiring target for node {keep}; edge ({keep}, {release}) kept");
                    report.stuck += 1;
                }
            }
        }
        (out, report)
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            if let Ok(pos) = self.adjacency[x].binary_search(&y) {
                self.adjacency[x].remove(pos);
            }
        }
    }

    fn insert_edge(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            if let Err(pos) = self.adjacency[x].binary_search(&y) {
                self.adjacency[x].insert(pos, y);
            }
        }
    }

    pub fn degree_statistics(&self) -> DegreeStats {
        let degrees = self.adjacency.iter().map(Vec::len);
        DegreeStats {
            mean: 2.0 * self.edge_count as f64 / self.node_count() as f64,
            min: degrees.clone().min().unwrap_or(0),
            max: degrees.max().unwrap_or(0),
        }
    }

    /// Full-scan check of symmetry, loops, duplicates and the stored edge count.
    pub fn validate(&self) -> Result<()> {
        let mut degree_sum = 0;
        for (i, list) in self.adjacency.iter().enumerate() {
            degree_sum += list.len();
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidState(format!("adjacency of {i} unsorted or duplicated")));
            }
            for &j in list {
                if j == i {
                    return Err(Error::InvalidState(format!("self-loop at {i}")));
                }
                if !self.has_edge(j, i) {
                    return Err(Error::InvalidState(format!("edge {i}->{j} not mirrored")));
                }
            }
        }
        if degree_sum != 2 * self.edge_count {
            return Err(Error::InvalidState(format!(
                "degree sum {degree_sum} != 2 * edge count {}",
                self.edge_count
            )));
        }
        Ok(())
    }

    /// One `i j` pair per line, `i < j`.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 10);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.edge_list_text()).map_err(|e| Error::io(path, e))
    }

    /// Copy of this topology with node `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> NetworkTopology {
        let mut adjacency = vec![Vec::new(); self.node_count()];
        for (i, list) in self.adjacency.iter().enumerate() {
            let mut mapped: Vec<usize> = list.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            adjacency[perm[i]] = mapped;
        }
        NetworkTopology {
            adjacency,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_lattice() {
        let t = build_regular_lattice(2).unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.edge_count(), 4);
        assert!((0..4).all(|i| t.degree(i) == 2));
        assert_eq!(t.degree_statistics().mean, 2.0);
    }

    #[test]
    fn three_by_three_degrees() {
        let t = build_regular_lattice(3).unwrap();
        assert_eq!(t.degree(4), 4);
        for corner in [0, 2, 6, 8] {
            assert_eq!(t.degree(corner), 2);
        }
        for mid in [1, 3, 5, 7] {
            assert_eq!(t.degree(mid), 3);
        }
    }

    #[test]
    fn desk_scale_lattice() {
        let t = build_regular_lattice(40).unwrap();
        assert_eq!(t.node_count(), 1600);
        assert_eq!(t.edge_count(), 3120);
        let s = t.degree_statistics();
        assert!((s.mean - 3.9).abs() < 1e-12);
        assert_eq!((s.min, s.max), (2, 4));
        t.validate().unwrap();
    }

    #[test]
    fn periodic_lattice_is_four_regular() {
        let t = build_lattice(40, Boundary::Periodic).unwrap();
        assert_eq!(t.edge_count(), 3200);
        assert_eq!(t.degree_statistics().mean, 4.0);
        t.validate().unwrap();
        assert!(build_lattice(2, Boundary::Periodic).is_err());
    }

    #[test]
    fn too_small() {
        assert!(matches!(build_regular_lattice(1), Err(Error::InvalidSize(_))));
        assert!(matches!(build_regular_lattice(0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn zero_probability_is_identity() {
        let t = build_regular_lattice(10).unwrap();
        let mut s = RandomSource::new(1, 1);
        let (r, report) = t.rewire(0.0, &mut s).unwrap();
        assert_eq!(report.rewired, 0);
        assert_eq!(r.edges(), t.edges());
    }

    #[test]
    fn desk_scale_rewiring_count() {
        let t = build_regular_lattice(40).unwrap();
        for seed in 0..20 {
            let mut s = RandomSource::new(seed, 1);
            let (r, report) = t.rewire(0.02, &mut s).unwrap();
            assert!((report.rewired as i64 - 62).abs() <= 25, "rewired {}", report.rewired);
            assert_eq!(r.edge_count(), 3120);
            r.validate().unwrap();
            assert!((r.degree_statistics().mean - 3.9).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rewiring_conserves_edges() {
        let t = build_regular_lattice(12).unwrap();
        let mut s = RandomSource::new(8, 1);
        let (r, report) = t.rewire(1.0, &mut s).unwrap();
        r.validate().unwrap();
        assert_eq!(r.edge_count(), t.edge_count());
        assert_eq!(report.rewired + report.stuck, t.edge_count());
        assert!(report.rewired > t.edge_count() / 2);
        let moved = t.edges().iter().filter(|&&(i, j)| !r.has_edge(i, j)).count();
        assert!(moved > 0);
    }

    #[test]
    fn complete_graph_edges_stay_put() {
        // 2x2 lattice plus rewiring: node 0 has neighbors {1, 2}; only 3 is legal
        let t = build_regular_lattice(2).unwrap();
        let mut s = RandomSource::new(4, 1);
        let (r, _) = t.rewire(1.0, &mut s).unwrap();
        r.validate().unwrap();
        assert_eq!(r.edge_count(), 4);
    }

    #[test]
    fn edge_list_format() {
        let t = build_regular_lattice(2).unwrap();
        assert_eq!(t.edge_list_text(), "0 1\n0 2\n1 3\n2 3\n");
    }

    #[test]
    fn rejects_bad_probability() {
        let t = build_regular_lattice(3).unwrap();
        let mut s = RandomSource::new(1, 1);
        assert!(t.rewire(1.5, &mut s).is_err());
        assert!(t.rewire(-0.1, &mut s).is_err());
    }

    /// Replays a recorded draw script, mapping node draws through a permutation.
    struct Scripted<'a> {
        chances: std::slice::Iter<'a, bool>,
        nodes: std::slice::Iter<'a, usize>,
        perm: &'a [usize],
    }

    impl RewireDraws for Scripted<'_> {
        fn chance(&mut self, _p: f64) -> bool {
            *self.chances.next().expect("chance script exhausted")
        }
        fn node(&mut self, _n: usize) -> usize {
            self.perm[*self.nodes.next().expect("node script exhausted")]
        }
    }

    /// Records the draws of a real source.
    struct Recording {
        inner: RandomSource,
        chances: Vec<bool>,
        nodes: Vec<usize>,
    }

    impl RewireDraws for Recording {
        fn chance(&mut self, p: f64) -> bool {
            let c = self.inner.chance(p);
            self.chances.push(c);
            c
        }
        fn node(&mut self, n: usize) -> usize {
            let k = self.inner.index(n);
            self.nodes.push(k);
            k
        }
    }

    proptest! {
        #[test]
        fn rewiring_keeps_graph_simple(side in 2usize..12, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let t = build_regular_lattice(side).unwrap();
            let mut s = RandomSource::new(seed, 1);
            let (r, _) = t.rewire(p, &mut s).unwrap();
            prop_assert!(r.validate().is_ok());
            prop_assert_eq!(r.edge_count(), t.edge_count());
            let degree_sum: usize = (0..r.node_count()).map(|i| r.degree(i)).sum();
            prop_assert_eq!(degree_sum, 2 * r.edge_count());
        }

        #[test]
        fn rewiring_commutes_with_relabeling(side in 2usize..8, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let t = build_regular_lattice(side).unwrap();
            let n = t.node_count();
            let mut perm: Vec<usize> = (0..n).collect();
            RandomSource::new(seed, 99).shuffle(&mut perm);

            let order = t.edges();
            let mut rec = Recording { inner: RandomSource::new(seed, 1), chances: vec![], nodes: vec![] };
            let (rewired, _) = t.rewire_in_order(&order, p, &mut rec);

            let mapped_order: Vec<(usize, usize)> = order.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let mut script = Scripted { chances: rec.chances.iter(), nodes: rec.nodes.iter(), perm: &perm };
            let (relabeled_then_rewired, _) = t.relabeled(&perm).rewire_in_order(&mapped_order, p, &mut script);

            prop_assert_eq!(relabeled_then_rewired.edges(), rewired.relabeled(&perm).edges());
        }
    }
}
