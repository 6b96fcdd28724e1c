//! Coarsening property checks shared by the proptest suite and the
//! acceptance target. Each returns a description of the first violation.

use amgsvm::coarsening::{
    build_hierarchy, build_interpolation, coarsen_level, copy_small_class_levels, select_seeds, CoarseningConfig,
    InterpolationMatrix, Level, EPS_WEIGHT,
};
use amgsvm::knn::{build_knn_graph, AffinityGraph, KnnMode, PointSet};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn finest(values: &[f64], d: usize, k: usize) -> Level {
    let g = build_knn_graph(PointSet::new(values, d), k, KnnMode::Exact).unwrap();
    Level::finest(g, values.to_vec(), d).unwrap()
}

/// Dense `sum_i sum_j P_ip W_ij P_jq` for `p != q`.
pub fn triple_sum(g: &AffinityGraph, p: &InterpolationMatrix) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let nc = p.n_coarse();
    let pd = p.matrix().to_dense();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (j, v) in g.neighbors(i) {
            w[i][j] = v;
        }
    }
    let mut out = vec![vec![0.0; nc]; nc];
    for a in 0..nc {
        for b in 0..nc {
            if a == b {
                continue;
            }
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += pd[i][a] * w[i][j] * pd[j][b];
                }
            }
            out[a][b] = s;
        }
    }
    out
}

pub fn row_stochastic(p: &InterpolationMatrix) -> Check {
    for i in 0..p.n_fine() {
        let row: Vec<(usize, f64)> = p.row(i).collect();
        ensure!(!row.is_empty(), "row {i} is empty");
        ensure!(row.iter().all(|&(_, v)| v > 0.0), "row {i} has a non-positive entry");
        let s: f64 = row.iter().map(|&(_, v)| v).sum();
        ensure!((s - 1.0).abs() <= 1e-12, "row {i} sums to {s}");
    }
    Ok(())
}

pub fn seed_coverage(level: &Level, q: f64, eta: f64) -> Check {
    let g = &level.graph;
    let seeds = select_seeds(g, q, eta);
    ensure!(seeds.iter().any(|&s| s), "no seeds");
    for i in 0..g.n_nodes() {
        if seeds[i] {
            continue;
        }
        let to_seeds: f64 = g.neighbors(i).filter(|&(j, _)| seeds[j]).map(|(_, w)| w).sum();
        ensure!(
            to_seeds > q * g.weighted_degree(i),
            "F node {i} coupling {to_seeds} of {}",
            g.weighted_degree(i)
        );
    }
    Ok(())
}

pub fn coarse_weights_match_triple_sum(level: &Level, caliber: usize) -> Check {
    let seeds = select_seeds(&level.graph, 0.5, 2.0);
    let p = build_interpolation(&level.graph, &seeds, caliber).map_err(|e| e.to_string())?;
    row_stochastic(&p)?;
    let coarse = coarsen_level(level, &p).map_err(|e| e.to_string())?;
    let oracle = triple_sum(&level.graph, &p);
    for a in 0..p.n_coarse() {
        for b in 0..p.n_coarse() {
            if a == b {
                continue;
            }
            let got = coarse.graph.weight(a, b).unwrap_or(0.0);
            let want = if oracle[a][b] >= EPS_WEIGHT { oracle[a][b] } else { 0.0 };
            ensure!((got - want).abs() <= 1e-12 * want.max(1.0), "({a}, {b}): {got} vs {want}");
        }
    }
    let fine_vol = level.graph.total_volume();
    ensure!(
        (coarse.graph.total_volume() - fine_vol).abs() <= 1e-9 * fine_vol,
        "volume {} vs {fine_vol}",
        coarse.graph.total_volume()
    );
    Ok(())
}

/// Row-stochastic P, per-level volume, copied-level identity, strict size
/// decrease and the stop condition on a padded hierarchy.
pub fn hierarchy_properties(values: &[f64], d: usize, cfg: &CoarseningConfig) -> Check {
    let n = values.len() / d;
    let h = build_hierarchy(finest(values, d, cfg.k), cfg).map_err(|e| e.to_string())?;
    let padded = copy_small_class_levels(h.clone(), h.depth() + 2).map_err(|e| e.to_string())?;
    for (l, level) in padded.levels.iter().enumerate() {
        ensure!(level.level_index == l, "level {l} has index {}", level.level_index);
        let vol = level.graph.total_volume();
        ensure!((vol - n as f64).abs() <= 1e-9 * n as f64, "level {l} volume {vol}");
        if let Some(p) = &level.interpolation {
            row_stochastic(p)?;
            let finer = &padded.levels[l - 1];
            ensure!(p.n_fine() == finer.len() && p.n_coarse() == level.len(), "level {l}: P shape");
            if level.copied {
                ensure!(p.is_identity(), "copied level {l} without identity P");
                ensure!(level.len() == finer.len(), "copied level {l} changed size");
            } else {
                ensure!(level.len() < finer.len(), "level {l}: {} not below {}", level.len(), finer.len());
            }
        }
    }
    let last = h.coarsest();
    let seeds = select_seeds(&last.graph, cfg.q, cfg.eta).iter().filter(|&&x| x).count();
    let stalled = seeds as f64 >= 0.95 * last.len() as f64;
    ensure!(
        last.len() <= cfg.stop_size || h.depth() == cfg.max_levels || stalled,
        "stopped at {} points after {} levels",
        last.len(),
        h.depth()
    );
    Ok(())
}

pub fn identity_fixpoint(level: &Level) -> Check {
    let c = coarsen_level(level, &InterpolationMatrix::identity(level.len())).map_err(|e| e.to_string())?;
    ensure!(c.points == level.points, "points moved");
    ensure!(c.graph.volumes() == level.graph.volumes(), "volumes changed");
    for i in 0..level.len() {
        ensure!(
            c.graph.neighbors(i).collect::<Vec<_>>() == level.graph.neighbors(i).collect::<Vec<_>>(),
            "row {i} changed"
        );
    }
    Ok(())
}
