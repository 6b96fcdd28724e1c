//! Weighted k-nearest-neighbor affinity graphs.
//!
//! Every node is linked to its `k` nearest Euclidean neighbors; the directed
//! neighbor lists are symmetrized by union. Edge weights are inverse
//! distances, capped for coincident points.

mod forest;

use std::collections::BinaryHeap;
use std::io::Write;

pub use forest::{ApproxParams, KdForest};

use crate::error::{Error, Result};

/// Distances below this are treated as this value when inverted.
pub const EPS_DIST: f64 = 1e-10;

/// Inverse Euclidean distance, `1 / max(|a - b|, EPS_DIST)`.
pub fn edge_weight(a: &[f64], b: &[f64]) -> f64 {
    1.0 / sq_dist(a, b).sqrt().max(EPS_DIST)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Undirected weighted graph in compressed adjacency form with node volumes.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    volumes: Vec<f64>,
    point_refs: Vec<usize>,
}

impl AffinityGraph {
    /// Builds a graph from undirected edges. Each pair may appear in either
    /// orientation and more than once; repeated pairs keep the first weight.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        volumes: Vec<f64>,
        point_refs: Vec<usize>,
    ) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) out of range")));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in &mut adj {
            // stable sort keeps the first weight of a repeated pair in front
            row.sort_by_key(|&(j, _)| j);
            row.dedup_by_key(|&mut (j, _)| j);
            for &(j, w) in row.iter() {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let g = AffinityGraph {
            offsets,
            targets,
            weights,
            volumes,
            point_refs,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.volumes.len() != n || self.point_refs.len() != n {
            return Err(Error::InvalidInput(
                "volumes and point references must have one entry per node".into(),
            ));
        }
        if let Some(v) = self.volumes.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("node volume {v} is not positive")));
        }
        for i in 0..n {
            for (j, w) in self.neighbors(i) {
                if j == i {
                    return Err(Error::Domain(format!("self-loop at node {i}")));
                }
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::Domain(format!("edge ({i}, {j}) has weight {w}")));
                }
            }
        }
        debug_assert!(self.is_symmetric(), "adjacency is not symmetric");
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn neighbor_ids(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.weights[self.offsets[i]..self.offsets[i + 1]].iter().sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let ids = self.neighbor_ids(i);
        ids.binary_search(&j)
            .ok()
            .map(|pos| self.weights[self.offsets[i] + pos])
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn volume(&self, i: usize) -> f64 {
        self.volumes[i]
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Row of the originating data set for each node.
    pub fn point_refs(&self) -> &[usize] {
        &self.point_refs
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n_nodes()).all(|i| self.neighbors(i).all(|(j, w)| self.weight(j, i) == Some(w)))
    }

    /// Text edge list: header `n_nodes n_edges`, then `i j w` per edge (`i < j`).
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n_nodes(), self.n_edges())?;
        for i in 0..self.n_nodes() {
            for (j, w) in self.neighbors(i).filter(|&(j, _)| j > i) {
                writeln!(out, "{i} {j} {w}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KnnMode {
    Exact,
    Approximate(ApproxParams),
    /// Exact below `AUTO_EXACT_LIMIT` points, approximate above.
    Auto,
}

impl Default for KnnMode {
    fn default() -> Self {
        KnnMode::Auto
    }
}

pub const AUTO_EXACT_LIMIT: usize = 20_000;

/// Row-major point set view.
#[derive(Clone, Copy, Debug)]
pub struct PointSet<'a> {
    pub values: &'a [f64],
    pub dim: usize,
}

impl<'a> PointSet<'a> {
    pub fn new(values: &'a [f64], dim: usize) -> Self {
        debug_assert!(dim == 0 || values.len() % dim == 0);
        PointSet { values, dim }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.values.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Candidate neighbor ordered by (squared distance, index).
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Candidate {
    pub dist: f64,
    pub index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded max-heap keeping the `k` smallest candidates.
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    /// Current k-th distance, infinite while fewer than k are held.
    pub fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |c| c.dist)
        }
    }

    pub fn into_sorted(self) -> Vec<Candidate> {
        self.heap.into_sorted_vec()
    }
}

/// Exact neighbor lists by pairwise scan; ties go to the lower index.
pub fn exact_neighbors(points: PointSet<'_>, k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut heaps: Vec<TopK> = (0..n).map(|_| TopK::new(k)).collect();
    for i in 0..n {
        let xi = points.row(i);
        for j in (i + 1)..n {
            let d = sq_dist(xi, points.row(j));
            heaps[i].offer(Candidate { dist: d, index: j });
            heaps[j].offer(Candidate { dist: d, index: i });
        }
    }
    heaps
        .into_iter()
        .map(|h| h.into_sorted().into_iter().map(|c| c.index).collect())
        .collect()
}

/// k-NN affinity graph with unit volumes. `point_refs` defaults to `0..n`.
pub fn build_knn_graph(points: PointSet<'_>, k: usize, mode: KnnMode) -> Result<AffinityGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Domain(format!("k-NN graph needs at least 2 points, got {n}")));
    }
    build_knn_graph_with(points, k, mode, vec![1.0; n], (0..n).collect())
}

/// As [`build_knn_graph`], with explicit volumes and row references. `k` is
/// clamped to `n - 1`.
pub fn build_knn_graph_with(
    points: PointSet<'_>,
    k: usize,
    mode: KnnMode,
    volumes: Vec<f64>,
    point_refs: Vec<usize>,
) -> Result<AffinityGraph> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if n < 2 {
        return AffinityGraph::from_edges(n, std::iter::empty(), volumes, point_refs);
    }
    let k = k.min(n - 1);
    let lists = match mode {
        KnnMode::Exact => exact_neighbors(points, k),
        KnnMode::Auto if n < AUTO_EXACT_LIMIT => exact_neighbors(points, k),
        KnnMode::Auto => KdForest::build(points, &ApproxParams::default()).all_neighbors(k),
        KnnMode::Approximate(params) => KdForest::build(points, &params).all_neighbors(k),
    };
    let edges = lists.iter().enumerate().flat_map(|(i, nbrs)| {
        nbrs.iter()
            .map(move |&j| (i, j, edge_weight(points.row(i), points.row(j))))
    });
    AffinityGraph::from_edges(n, edges, volumes, point_refs)
}
