//! AMG aggregation of one class of training points into a hierarchy of
//! successively coarser graphs and point sets.
//!
//! Each step picks seeds by future volume and coupling strength, builds a
//! row-stochastic interpolation matrix `P`, and derives the coarse graph
//! (`P^T W P` without its diagonal), coarse volumes (`P^T v`) and coarse
//! points (volume-weighted centroids of the aggregates).

mod interpolation;
mod seeds;

use std::io::Write;
use std::str::FromStr;

pub use interpolation::{build_interpolation, InterpolationMatrix};
pub use seeds::{future_volumes, future_volumes_restricted, select_seeds};

use crate::error::{Error, Result};
use crate::knn::{build_knn_graph_with, AffinityGraph, KnnMode, PointSet};
use crate::sparse::Csr;

/// Coarse entries below this magnitude are dropped.
pub const EPS_WEIGHT: f64 = 1e-12;

/// How the graph of a coarse level is wired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoarseEdges {
    /// Off-diagonal part of `P^T W P`.
    Algebraic,
    /// Fresh k-NN inverse-distance graph on the coarse points.
    #[default]
    Knn,
}

impl FromStr for CoarseEdges {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(CoarseEdges::Algebraic),
            "knn" => Ok(CoarseEdges::Knn),
            other => Err(Error::InvalidInput(format!("unknown coarse-edge mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseningConfig {
    /// Coupling threshold for seed selection.
    pub q: f64,
    /// Outlier factor on the mean future volume.
    pub eta: f64,
    /// Interpolation order: max nonzeros per row of `P`.
    pub caliber: usize,
    pub k: usize,
    pub stop_size: usize,
    pub max_levels: usize,
    pub coarse_edges: CoarseEdges,
    pub knn_mode: KnnMode,
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        CoarseningConfig {
            q: 0.5,
            eta: 2.0,
            caliber: 2,
            k: 10,
            stop_size: 500,
            max_levels: 50,
            coarse_edges: CoarseEdges::Knn,
            knn_mode: KnnMode::Auto,
        }
    }
}

impl CoarseningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidInput(format!("Q = {} not in (0, 1)", self.q)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidInput(format!("eta = {} must be positive", self.eta)));
        }
        if self.caliber == 0 || self.k == 0 || self.max_levels == 0 {
            return Err(Error::InvalidInput("caliber, k and max_levels must be positive".into()));
        }
        if self.stop_size < 2 {
            return Err(Error::InvalidInput("stop size must be at least 2".into()));
        }
        Ok(())
    }
}

/// One level of a class hierarchy.
#[derive(Clone, Debug)]
pub struct Level {
    pub graph: AffinityGraph,
    /// Row-major points, one per graph node.
    pub points: Vec<f64>,
    pub dim: usize,
    /// Interpolation from the next finer level to this one; `None` at level 0.
    pub interpolation: Option<InterpolationMatrix>,
    pub level_index: usize,
    /// Set on levels padded by repeating a coarser one.
    pub copied: bool,
}

impl Level {
    pub fn finest(graph: AffinityGraph, points: Vec<f64>, dim: usize) -> Result<Level> {
        if points.len() != graph.n_nodes() * dim {
            return Err(Error::InvalidInput("points do not match graph nodes".into()));
        }
        Ok(Level {
            graph,
            points,
            dim,
            interpolation: None,
            level_index: 0,
            copied: false,
        })
    }

    pub fn len(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_set(&self) -> PointSet<'_> {
        PointSet::new(&self.points, self.dim)
    }

    pub fn volumes(&self) -> &[f64] {
        self.graph.volumes()
    }
}

fn weight_matrix(g: &AffinityGraph) -> Csr {
    let rows = (0..g.n_nodes()).map(|i| g.neighbors(i).collect()).collect();
    Csr::from_rows(g.n_nodes(), rows)
}

/// Coarse level from a fine level and its interpolation matrix, using the
/// algebraic coarse weights.
pub fn coarsen_level(fine: &Level, p: &InterpolationMatrix) -> Result<Level> {
    if p.n_fine() != fine.len() {
        return Err(Error::InvalidInput(format!(
            "interpolation has {} rows for {} fine nodes",
            p.n_fine(),
            fine.len()
        )));
    }
    let nc = p.n_coarse();
    let pm = p.matrix();
    let coarse_w = pm.transpose().matmul(&weight_matrix(&fine.graph).matmul(pm));

    // the product is symmetric only up to rounding; mirror the upper triangle
    let mut edges = Vec::new();
    for a in 0..nc {
        for (b, w) in coarse_w.row(a) {
            if b > a && w >= EPS_WEIGHT {
                edges.push((a, b, w));
            }
        }
    }

    let volumes = pm.transpose_mul_vec(fine.volumes());
    let dim = fine.dim;
    let mut points = vec![0.0; nc * dim];
    for i in 0..fine.len() {
        let vi = fine.graph.volume(i);
        let xi = fine.point(i);
        for (c, pic) in p.row(i) {
            let share = vi * pic;
            for (acc, x) in points[c * dim..(c + 1) * dim].iter_mut().zip(xi) {
                *acc += share * x;
            }
        }
    }
    for c in 0..nc {
        let vol = volumes[c];
        points[c * dim..(c + 1) * dim].iter_mut().for_each(|x| *x /= vol);
    }
    let graph = AffinityGraph::from_edges(nc, edges, volumes, (0..nc).collect())?;
    Ok(Level {
        graph,
        points,
        dim,
        interpolation: Some(p.clone()),
        level_index: fine.level_index + 1,
        copied: false,
    })
}

/// Coarsening hierarchy of one class, finest level first.
#[derive(Clone, Debug)]
pub struct ClassHierarchy {
    pub levels: Vec<Level>,
}

impl ClassHierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Level {
        &self.levels[0]
    }

    pub fn coarsest(&self) -> &Level {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Level::len).collect()
    }

    /// Text dump of every level: node count, edge list, volumes and `P`
    /// triplets.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for level in &self.levels {
            writeln!(
                out,
                "level {} nodes {} copied {}",
                level.level_index,
                level.len(),
                level.copied
            )?;
            writeln!(out, "edges")?;
            level.graph.write_edge_list(&mut out)?;
            writeln!(out, "volumes")?;
            for v in level.volumes() {
                writeln!(out, "{v}")?;
            }
            if let Some(p) = &level.interpolation {
                writeln!(out, "interpolation {} {} {}", p.n_fine(), p.n_coarse(), p.matrix().nnz())?;
                for (i, c, v) in p.triplets() {
                    writeln!(out, "{i} {c} {v}")?;
                }
            }
        }
        Ok(())
    }
}

/// Repeated coarsening until the level is at most `stop_size` nodes, the
/// seed set stalls at 95% of the nodes, or `max_levels` levels exist.
pub fn build_hierarchy(finest: Level, cfg: &CoarseningConfig) -> Result<ClassHierarchy> {
    cfg.validate()?;
    let mut levels = vec![finest];
    loop {
        let fine = levels.last().unwrap();
        if fine.len() <= cfg.stop_size || levels.len() >= cfg.max_levels {
            break;
        }
        let is_seed = select_seeds(&fine.graph, cfg.q, cfg.eta);
        let n_seeds = is_seed.iter().filter(|&&s| s).count();
        if n_seeds as f64 >= 0.95 * fine.len() as f64 {
            log::debug!("coarsening stalled at {} nodes ({} seeds)", fine.len(), n_seeds);
            break;
        }
        let p = build_interpolation(&fine.graph, &is_seed, cfg.caliber)?;
        let mut coarse = coarsen_level(fine, &p)?;
        if cfg.coarse_edges == CoarseEdges::Knn {
            let volumes = coarse.graph.volumes().to_vec();
            let refs = coarse.graph.point_refs().to_vec();
            coarse.graph = build_knn_graph_with(coarse.point_set(), cfg.k, cfg.knn_mode, volumes, refs)?;
        }
        levels.push(coarse);
    }
    Ok(ClassHierarchy { levels })
}

/// Pads a hierarchy by repeating its coarsest level (identity `P`, copied
/// flag set) until it has `target_depth` levels.
pub fn copy_small_class_levels(mut h: ClassHierarchy, target_depth: usize) -> Result<ClassHierarchy> {
    if target_depth < h.depth() {
        return Err(Error::InvalidInput(format!(
            "target depth {target_depth} below current depth {}",
            h.depth()
        )));
    }
    while h.depth() < target_depth {
        let last = h.coarsest();
        let copy = Level {
            graph: last.graph.clone(),
            points: last.points.clone(),
            dim: last.dim,
            interpolation: Some(InterpolationMatrix::identity(last.len())),
            level_index: last.level_index + 1,
            copied: true,
        };
        h.levels.push(copy);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{build_knn_graph, KnnMode};

    fn path3() -> Level {
        let g = AffinityGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], vec![1.0; 3], vec![0, 1, 2]).unwrap();
        Level::finest(g, vec![0.0, 1.0, 2.0], 1).unwrap()
    }

    #[test]
    fn path_with_split_middle() {
        let fine = path3();
        let p = build_interpolation(&fine.graph, &[true, false, true], 2).unwrap();
        assert_eq!(p.row(1).collect::<Vec<_>>(), vec![(0, 0.5), (1, 0.5)]);
        let coarse = coarsen_level(&fine, &p).unwrap();
        assert_eq!(coarse.len(), 2);
        assert!((coarse.graph.weight(0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(coarse.volumes(), &[1.5, 1.5]);
        // centroid of {x0: 1, x1: 0.5} = 0.5 / 1.5
        assert!((coarse.point(0)[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_interpolation_is_a_fixpoint() {
        let fine = path3();
        let coarse = coarsen_level(&fine, &InterpolationMatrix::identity(3)).unwrap();
        assert_eq!(coarse.graph.volumes(), fine.graph.volumes());
        assert_eq!(coarse.points, fine.points);
        for i in 0..3 {
            assert_eq!(coarse.graph.neighbors(i).collect::<Vec<_>>(), fine.graph.neighbors(i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn full_aggregate_centroid() {
        let g = AffinityGraph::from_edges(2, [(0, 1, 1.0)], vec![1.0; 2], vec![0, 1]).unwrap();
        let fine = Level::finest(g, vec![0.0, 0.0, 2.0, 0.0], 2).unwrap();
        let p = build_interpolation(&fine.graph, &[true, false], 2).unwrap();
        let coarse = coarsen_level(&fine, &p).unwrap();
        assert_eq!(coarse.volumes(), &[2.0]);
        assert_eq!(coarse.points, vec![1.0, 0.0]);
        assert_eq!(coarse.graph.n_edges(), 0);
    }

    #[test]
    fn small_input_is_a_single_level() {
        let pts: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let g = build_knn_graph(PointSet::new(&pts, 1), 10, KnnMode::Exact).unwrap();
        let h = build_hierarchy(Level::finest(g, pts, 1).unwrap(), &CoarseningConfig::default()).unwrap();
        assert_eq!(h.depth(), 1);
    }

    #[test]
    fn padding_repeats_coarsest() {
        let h = ClassHierarchy { levels: vec![path3()] };
        let padded = copy_small_class_levels(h.clone(), 3).unwrap();
        assert_eq!(padded.depth(), 3);
        assert!(padded.levels[1].copied && padded.levels[2].copied);
        assert!(padded.levels[2].interpolation.as_ref().unwrap().is_identity());
        assert_eq!(copy_small_class_levels(h.clone(), 1).unwrap().depth(), 1);
        assert!(copy_small_class_levels(padded, 2).is_err());
    }
}
