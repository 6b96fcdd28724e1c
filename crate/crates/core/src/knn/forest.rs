//! Randomized kd-tree forest for approximate nearest-neighbor queries.
//!
//! Each tree splits at the mean of a dimension drawn at random from the few
//! highest-variance ones. A query descends all trees and then explores the
//! pending branches best-bin-first, stopping after `checks` distance
//! evaluations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sq_dist, Candidate, PointSet, TopK};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxParams {
    pub trees: usize,
    /// Distance evaluations per query.
    pub checks: usize,
    pub leaf_size: usize,
    pub seed: u64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            trees: 4,
            checks: 512,
            leaf_size: 8,
            seed: 0,
        }
    }
}

const TOP_VARIANCE_DIMS: usize = 5;
const VARIANCE_SAMPLE: usize = 128;

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

pub struct KdForest<'a> {
    points: PointSet<'a>,
    trees: Vec<Tree>,
    checks: usize,
}

impl<'a> KdForest<'a> {
    pub fn build(points: PointSet<'a>, params: &ApproxParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let trees = (0..params.trees.max(1))
            .map(|_| {
                let mut tree = Tree {
                    nodes: Vec::new(),
                    order: (0..points.len()).collect(),
                };
                let n = points.len();
                build_node(&mut tree, points, 0, n, params.leaf_size.max(1), &mut rng);
                tree
            })
            .collect();
        KdForest {
            points,
            trees,
            checks: params.checks.max(1),
        }
    }

    /// Approximate `k` nearest neighbors of `query`, excluding `skip`.
    pub fn query(&self, query: &[f64], k: usize, skip: Option<usize>, seen: &mut Seen) -> Vec<usize> {
        seen.next_round();
        let mut best = TopK::new(k);
        let mut pending: BinaryHeap<Reverse<Branch>> = BinaryHeap::new();
        let mut checked = 0usize;
        for (t, tree) in self.trees.iter().enumerate() {
            self.descend(t, tree, 0, query, skip, seen, &mut best, &mut pending, &mut checked);
        }
        while checked < self.checks {
            let Some(Reverse(branch)) = pending.pop() else {
                break;
            };
            if branch.bound > best.bound() {
                break;
            }
            let tree = &self.trees[branch.tree];
            self.descend(branch.tree, tree, branch.node, query, skip, seen, &mut best, &mut pending, &mut checked);
        }
        best.into_sorted().into_iter().map(|c| c.index).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        t: usize,
        tree: &Tree,
        mut node: usize,
        query: &[f64],
        skip: Option<usize>,
        seen: &mut Seen,
        best: &mut TopK,
        pending: &mut BinaryHeap<Reverse<Branch>>,
        checked: &mut usize,
    ) {
        loop {
            match tree.nodes[node] {
                Node::Split { dim, value, left, right } => {
                    let diff = query[dim] - value;
                    let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                    pending.push(Reverse(Branch {
                        bound: diff * diff,
                        tree: t,
                        node: far,
                    }));
                    node = near;
                }
                Node::Leaf { start, end } => {
                    for &p in &tree.order[start..end] {
                        if Some(p) == skip || !seen.insert(p) {
                            continue;
                        }
                        *checked += 1;
                        best.offer(Candidate {
                            dist: sq_dist(query, self.points.row(p)),
                            index: p,
                        });
                    }
                    return;
                }
            }
        }
    }

    /// Neighbor lists of every indexed point.
    pub fn all_neighbors(&self, k: usize) -> Vec<Vec<usize>> {
        let mut seen = Seen::new(self.points.len());
        (0..self.points.len())
            .map(|i| self.query(self.points.row(i), k, Some(i), &mut seen))
            .collect()
    }
}

/// Per-query visited set, reset in O(1) by bumping a stamp.
pub struct Seen {
    stamps: Vec<u32>,
    round: u32,
}

impl Seen {
    pub fn new(n: usize) -> Self {
        Seen {
            stamps: vec![0; n],
            round: 0,
        }
    }

    fn next_round(&mut self) {
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.round = 1;
        }
    }

    fn insert(&mut self, i: usize) -> bool {
        if self.stamps[i] == self.round {
            false
        } else {
            self.stamps[i] = self.round;
            true
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Branch {
    bound: f64,
    tree: usize,
    node: usize,
}

impl Eq for Branch {}

impl Ord for Branch {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.tree.cmp(&other.tree))
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Branch {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn build_node(
    tree: &mut Tree,
    points: PointSet<'_>,
    start: usize,
    end: usize,
    leaf_size: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf { start, end });
    if end - start <= leaf_size {
        return id;
    }
    let Some((dim, value)) = choose_split(&tree.order[start..end], points, rng) else {
        return id;
    };
    let slice = &mut tree.order[start..end];
    let mut lo = 0;
    let mut hi = slice.len();
    while lo < hi {
        if points.row(slice[lo])[dim] < value {
            lo += 1;
        } else {
            hi -= 1;
            slice.swap(lo, hi);
        }
    }
    if lo == 0 || lo == slice.len() {
        return id;
    }
    let mid = start + lo;
    let left = build_node(tree, points, start, mid, leaf_size, rng);
    let right = build_node(tree, points, mid, end, leaf_size, rng);
    tree.nodes[id] = Node::Split { dim, value, left, right };
    id
}

fn choose_split(idx: &[usize], points: PointSet<'_>, rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let d = points.dim;
    let sample: Vec<usize> = if idx.len() > VARIANCE_SAMPLE {
        idx.choose_multiple(rng, VARIANCE_SAMPLE).copied().collect()
    } else {
        idx.to_vec()
    };
    let m = sample.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in &sample {
        for (acc, x) in mean.iter_mut().zip(points.row(i)) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut var = vec![0.0; d];
    for &i in &sample {
        for (j, x) in points.row(i).iter().enumerate() {
            var[j] += (x - mean[j]).powi(2);
        }
    }
    let mut dims: Vec<usize> = (0..d).filter(|&j| var[j] > 0.0).collect();
    if dims.is_empty() {
        return None;
    }
    dims.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    dims.truncate(TOP_VARIANCE_DIMS);
    let dim = dims[rng.gen_range(0..dims.len())];
    Some((dim, mean[dim]))
}
