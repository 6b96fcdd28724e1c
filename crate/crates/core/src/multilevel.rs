//! Coarsen each class, tune on the coarsest level, then refine level by level
//! on the fine points behind the support vectors.

use std::io::Write;
use std::time::Instant;

use crate::coarsening::{build_hierarchy, copy_small_class_levels, ClassHierarchy, CoarseningConfig, Level};
use crate::data::{k_fold_indices, stratified_split_indices, Dataset};
use crate::error::{Error, Result};
use crate::knn::{build_knn_graph_with, PointSet};
use crate::metrics::{compute_metrics, Metrics};
use crate::svm::{self, ModelParams, SolverConfig, TrainedModel};
use crate::tuning::{tune, SearchDomain, TuneOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct MultilevelConfig {
    pub coarsening: CoarseningConfig,
    /// Below this many training points a level is re-tuned around the
    /// inherited parameters; otherwise they are reused as is.
    pub q_dt: usize,
    pub ud: SearchDomain,
    pub folds: usize,
    pub solver: SolverConfig,
    /// Add the graph neighbors of aggregate members to each refined set.
    pub neighbor_expand: bool,
    /// Scale each point's box constraint by its volume.
    pub volume_weighting: bool,
    pub seed: u64,
    /// Stratified share of the training data held out for per-level
    /// reporting; 0 disables the hold-out.
    pub validation_fraction: f64,
}

impl Default for MultilevelConfig {
    fn default() -> Self {
        MultilevelConfig {
            coarsening: CoarseningConfig::default(),
            q_dt: 4000,
            ud: SearchDomain::default(),
            folds: 5,
            solver: SolverConfig::default(),
            neighbor_expand: false,
            volume_weighting: false,
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl MultilevelConfig {
    pub fn validate(&self) -> Result<()> {
        self.coarsening.validate()?;
        self.ud.validate()?;
        if self.q_dt < self.coarsening.stop_size {
            return Err(Error::InvalidInput(format!(
                "q_dt = {} is below the stop size {}",
                self.q_dt, self.coarsening.stop_size
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidInput("need at least 2 folds".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidInput(format!(
                "validation fraction {} not in [0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Model of one level together with the level nodes it was trained on.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub model: TrainedModel,
    pub params: ModelParams,
    /// Training nodes per class (`[positive, negative]`), ascending.
    pub train_nodes: [Vec<usize>; 2],
    /// Support-vector nodes per class, ascending.
    pub sv_node_ids: [Vec<usize>; 2],
    pub level_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub refined: bool,
    pub params: ModelParams,
    pub n_sv: usize,
    /// G-mean on the hold-out, `None` without one.
    pub kappa_val: Option<f64>,
    pub seconds: f64,
    /// Nodes in each class hierarchy at this level.
    pub level_sizes: [usize; 2],
    /// Total volume of each class hierarchy at this level.
    pub level_volumes: [f64; 2],
}

impl LevelReport {
    pub fn n_train(&self) -> usize {
        self.n_plus + self.n_minus
    }
}

#[derive(Clone, Debug)]
pub struct MultilevelOutput {
    /// Final model; `sv_indices` refer to rows of the input training set.
    pub model: TrainedModel,
    pub params: ModelParams,
    /// Coarsest level first.
    pub report: Vec<LevelReport>,
    pub hierarchy_sizes: [Vec<usize>; 2],
    pub coarsening_seconds: f64,
    pub validation: Option<Metrics>,
}

/// Training rows and hold-out rows of the input set.
fn carve_validation(train: &Dataset, cfg: &MultilevelConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if cfg.validation_fraction == 0.0 {
        return Ok(((0..train.len()).collect(), Vec::new()));
    }
    match stratified_split_indices(train, cfg.validation_fraction, cfg.seed) {
        Ok(split) => Ok(split),
        Err(Error::Domain(msg)) => {
            log::warn!("no validation hold-out: {msg}");
            Ok(((0..train.len()).collect(), Vec::new()))
        }
        Err(e) => Err(e),
    }
}

fn check_input(train: &Dataset, cfg: &MultilevelConfig) -> Result<()> {
    cfg.validate()?;
    if train.n_plus() == 0 || train.n_minus() == 0 {
        return Err(Error::Domain("training data must contain both classes".into()));
    }
    Ok(())
}

/// Training set assembled from chosen nodes of both classes, positives
/// first, with node volumes as optional box weights.
struct LevelData {
    ds: Dataset,
    volumes: Vec<f64>,
    n_plus: usize,
}

fn assemble(levels: [&Level; 2], nodes: &[Vec<usize>; 2]) -> Result<LevelData> {
    let dim = levels[0].dim;
    let n = nodes[0].len() + nodes[1].len();
    let mut points = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    let mut volumes = Vec::with_capacity(n);
    for (c, label) in [(0, 1i8), (1, -1)] {
        for &i in &nodes[c] {
            points.extend_from_slice(levels[c].point(i));
            labels.push(label);
            volumes.push(levels[c].graph.volume(i));
        }
    }
    Ok(LevelData {
        ds: Dataset::new(points, labels, dim)?,
        volumes,
        n_plus: nodes[0].len(),
    })
}

/// Tunes (or, with too few points per class for cross-validation, trains
/// once) on a level training set.
fn tune_level(
    data: &LevelData,
    center: Option<&ModelParams>,
    cfg: &MultilevelConfig,
    seed: u64,
) -> Result<(TrainedModel, ModelParams)> {
    let opts = TuneOptions {
        solver: cfg.solver,
        weights: cfg.volume_weighting.then_some(&data.volumes[..]),
    };
    let folds = cfg.folds.min(data.ds.n_plus()).min(data.ds.n_minus());
    if folds < 2 {
        let params = match center {
            Some(c) => *c,
            None => {
                let r = cfg.ud.rect;
                let (lc, lg) = ((r.log2_c.0 + r.log2_c.1) / 2.0, (r.log2_gamma.0 + r.log2_gamma.1) / 2.0);
                cfg.ud.weight_rule.params(lc.exp2(), lg.exp2(), data.ds.n_plus(), data.ds.n_minus())
            }
        };
        log::info!("class too small for cross-validation; training once");
        let model = train_once(data, &params, cfg)?;
        return Ok((model, params));
    }
    if folds < cfg.folds {
        log::info!("using {folds} folds instead of {}", cfg.folds);
    }
    let fold_idx = k_fold_indices(&data.ds, folds, seed)?;
    let r = tune(&data.ds, &fold_idx, &cfg.ud, center, &opts)?;
    Ok((r.best_model, r.best_params))
}

fn train_once(data: &LevelData, params: &ModelParams, cfg: &MultilevelConfig) -> Result<TrainedModel> {
    let weights = cfg.volume_weighting.then_some(&data.volumes[..]);
    match svm::train(&data.ds, weights, params, &cfg.solver) {
        Ok(m) => Ok(m),
        Err(Error::NotConverged { best, violation, .. }) => {
            log::warn!("solver stopped at violation {violation:.3e}; keeping last iterate");
            Ok(*best)
        }
        Err(e) => Err(e),
    }
}

fn split_svs(model: &TrainedModel, nodes: &[Vec<usize>; 2]) -> [Vec<usize>; 2] {
    let n_plus = nodes[0].len();
    let mut out = [Vec::new(), Vec::new()];
    for &s in &model.sv_indices {
        if s < n_plus {
            out[0].push(nodes[0][s]);
        } else {
            out[1].push(nodes[1][s - n_plus]);
        }
    }
    out
}

fn validation_kappa(model: &TrainedModel, val: Option<&Dataset>) -> Result<Option<f64>> {
    match val {
        Some(v) if !v.is_empty() => {
            let pred = model.predict_dataset(v)?;
            Ok(Some(compute_metrics(&pred, v.labels())?.kappa))
        }
        _ => Ok(None),
    }
}

fn finest_level(fit: &Dataset, rows: &[usize], cfg: &CoarseningConfig) -> Result<Level> {
    let d = fit.n_features();
    let mut points = Vec::with_capacity(rows.len() * d);
    for &r in rows {
        points.extend_from_slice(fit.row(r));
    }
    let graph = build_knn_graph_with(
        PointSet::new(&points, d),
        cfg.k,
        cfg.knn_mode,
        vec![1.0; rows.len()],
        rows.to_vec(),
    )?;
    Level::finest(graph, points, d)
}

/// Coarsening hierarchies of both classes of `fit`, padded to equal depth.
pub fn build_class_hierarchies(fit: &Dataset, cfg: &CoarseningConfig) -> Result<[ClassHierarchy; 2]> {
    let mut hs = Vec::with_capacity(2);
    for label in [1i8, -1] {
        let rows = fit.class_indices(label);
        hs.push(build_hierarchy(finest_level(fit, &rows, cfg)?, cfg)?);
    }
    let depth = hs[0].depth().max(hs[1].depth());
    let minus = copy_small_class_levels(hs.pop().unwrap(), depth)?;
    let plus = copy_small_class_levels(hs.pop().unwrap(), depth)?;
    Ok([plus, minus])
}

/// Trains on the coarsest levels of both hierarchies.
pub fn coarsest_train(levels: [&Level; 2], cfg: &MultilevelConfig) -> Result<LevelSolution> {
    let level_index = levels[0].level_index;
    let nodes = [(0..levels[0].len()).collect(), (0..levels[1].len()).collect()];
    let data = assemble(levels, &nodes)?;
    let (model, params) = tune_level(&data, None, cfg, cfg.seed.wrapping_add(level_index as u64))?;
    Ok(LevelSolution {
        sv_node_ids: split_svs(&model, &nodes),
        model,
        params,
        train_nodes: nodes,
        level_index,
    })
}

/// Fine nodes of one class to train on: members of the aggregates of the
/// coarse support vectors, optionally widened by their graph neighbors.
///
/// A copied coarse level keeps its whole class in training.
pub fn refinement_nodes(coarse: &Level, fine: &Level, coarse_svs: &[usize], neighbor_expand: bool) -> Vec<usize> {
    if coarse.copied {
        return (0..fine.len()).collect();
    }
    let p = coarse
        .interpolation
        .as_ref()
        .expect("coarse level carries its interpolation");
    let mut mark = vec![false; fine.len()];
    for &c in coarse_svs {
        for &i in p.aggregate(c) {
            mark[i] = true;
        }
    }
    if neighbor_expand {
        let members: Vec<usize> = (0..fine.len()).filter(|&i| mark[i]).collect();
        for i in members {
            for &j in fine.graph.neighbor_ids(i) {
                mark[j] = true;
            }
        }
    }
    (0..fine.len()).filter(|&i| mark[i]).collect()
}

/// One uncoarsening step from `coarse` (levels `l + 1`) to `fine` (levels `l`).
///
/// Returns the solution and whether parameters were re-tuned.
pub fn uncoarsen_step(
    sol: &LevelSolution,
    coarse: [&Level; 2],
    fine: [&Level; 2],
    cfg: &MultilevelConfig,
) -> Result<(LevelSolution, bool)> {
    let level_index = fine[0].level_index;
    let mut nodes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for c in 0..2 {
        nodes[c] = refinement_nodes(coarse[c], fine[c], &sol.sv_node_ids[c], cfg.neighbor_expand);
        if nodes[c].is_empty() {
            log::info!("level {level_index}: no support vectors in class {c}; using the whole class");
            nodes[c] = (0..fine[c].len()).collect();
        }
    }
    let data = assemble(fine, &nodes)?;
    let refined = data.ds.len() < cfg.q_dt;
    let (model, params) = if refined {
        tune_level(&data, Some(&sol.params), cfg, cfg.seed.wrapping_add(level_index as u64))?
    } else {
        (train_once(&data, &sol.params, cfg)?, sol.params)
    };
    debug_assert_eq!(data.n_plus, nodes[0].len());
    Ok((
        LevelSolution {
            sv_node_ids: split_svs(&model, &nodes),
            model,
            params,
            train_nodes: nodes,
            level_index,
        },
        refined,
    ))
}

/// Replaces level-node support-vector indices by rows of the input set.
fn to_input_rows(mut model: TrainedModel, sol: &LevelSolution, finest: [&Level; 2], fit_rows: &[usize]) -> TrainedModel {
    let n_plus = sol.train_nodes[0].len();
    model.sv_indices = model
        .sv_indices
        .iter()
        .map(|&s| {
            let (c, node) = if s < n_plus {
                (0, sol.train_nodes[0][s])
            } else {
                (1, sol.train_nodes[1][s - n_plus])
            };
            fit_rows[finest[c].graph.point_refs()[node]]
        })
        .collect();
    model
}

fn report_for(
    sol: &LevelSolution,
    levels: [&Level; 2],
    refined: bool,
    val: Option<&Dataset>,
    seconds: f64,
) -> Result<LevelReport> {
    Ok(LevelReport {
        level: sol.level_index,
        n_plus: sol.train_nodes[0].len(),
        n_minus: sol.train_nodes[1].len(),
        refined,
        params: sol.params,
        n_sv: sol.model.n_sv(),
        kappa_val: validation_kappa(&sol.model, val)?,
        seconds,
        level_sizes: [levels[0].len(), levels[1].len()],
        level_volumes: [levels[0].graph.total_volume(), levels[1].graph.total_volume()],
    })
}

/// Full multilevel training on `train`.
pub fn train_multilevel(train: &Dataset, cfg: &MultilevelConfig) -> Result<MultilevelOutput> {
    check_input(train, cfg)?;
    let (fit_rows, val_rows) = carve_validation(train, cfg)?;
    let fit = train.subset(&fit_rows);
    let val = (!val_rows.is_empty()).then(|| train.subset(&val_rows));

    let t0 = Instant::now();
    let hs = build_class_hierarchies(&fit, &cfg.coarsening)?;
    let coarsening_seconds = t0.elapsed().as_secs_f64();
    let depth = hs[0].depth();
    log::info!(
        "hierarchies: positive {:?}, negative {:?}",
        hs[0].sizes(),
        hs[1].sizes()
    );

    let mut report = Vec::with_capacity(depth);
    let top = [&hs[0].levels[depth - 1], &hs[1].levels[depth - 1]];
    let t = Instant::now();
    let mut sol = coarsest_train(top, cfg)?;
    report.push(report_for(&sol, top, true, val.as_ref(), t.elapsed().as_secs_f64())?);

    for l in (0..depth - 1).rev() {
        let t = Instant::now();
        let coarse = [&hs[0].levels[l + 1], &hs[1].levels[l + 1]];
        let fine = [&hs[0].levels[l], &hs[1].levels[l]];
        let (next, refined) = uncoarsen_step(&sol, coarse, fine, cfg)?;
        sol = next;
        report.push(report_for(&sol, fine, refined, val.as_ref(), t.elapsed().as_secs_f64())?);
        log::debug!("level {l}: {} training points, {} SVs", sol.train_nodes[0].len() + sol.train_nodes[1].len(), sol.model.n_sv());
    }

    let finest = [&hs[0].levels[0], &hs[1].levels[0]];
    let validation = match &val {
        Some(v) => Some(predict_final(&sol.model, v)?),
        None => None,
    };
    let params = sol.params;
    let model = to_input_rows(sol.model.clone(), &sol, finest, &fit_rows);
    Ok(MultilevelOutput {
        model,
        params,
        report,
        hierarchy_sizes: [hs[0].sizes(), hs[1].sizes()],
        coarsening_seconds,
        validation,
    })
}

/// Uniform-design tuned WSVM on the whole training set (after the same
/// hold-out as [`train_multilevel`]).
pub fn train_flat(train: &Dataset, cfg: &MultilevelConfig) -> Result<MultilevelOutput> {
    check_input(train, cfg)?;
    let (fit_rows, val_rows) = carve_validation(train, cfg)?;
    let fit = train.subset(&fit_rows);
    let val = (!val_rows.is_empty()).then(|| train.subset(&val_rows));
    let nodes = [fit.class_indices(1), fit.class_indices(-1)];
    let d = fit.n_features();
    let mut points = Vec::with_capacity(fit.len() * d);
    let mut labels = Vec::with_capacity(fit.len());
    for (c, label) in [(0, 1i8), (1, -1)] {
        for &r in &nodes[c] {
            points.extend_from_slice(fit.row(r));
            labels.push(label);
        }
    }
    let data = LevelData {
        ds: Dataset::new(points, labels, d)?,
        volumes: vec![1.0; fit.len()],
        n_plus: nodes[0].len(),
    };
    let t = Instant::now();
    let (mut model, params) = tune_level(&data, None, cfg, cfg.seed)?;
    let seconds = t.elapsed().as_secs_f64();
    let kappa_val = validation_kappa(&model, val.as_ref())?;
    let n_sv = model.n_sv();
    model.sv_indices = model
        .sv_indices
        .iter()
        .map(|&s| {
            if s < data.n_plus {
                fit_rows[nodes[0][s]]
            } else {
                fit_rows[nodes[1][s - data.n_plus]]
            }
        })
        .collect();
    let validation = match &val {
        Some(v) => Some(predict_final(&model, v)?),
        None => None,
    };
    Ok(MultilevelOutput {
        model,
        params,
        report: vec![LevelReport {
            level: 0,
            n_plus: nodes[0].len(),
            n_minus: nodes[1].len(),
            refined: true,
            params,
            n_sv,
            kappa_val,
            seconds,
            level_sizes: [nodes[0].len(), nodes[1].len()],
            level_volumes: [nodes[0].len() as f64, nodes[1].len() as f64],
        }],
        hierarchy_sizes: [vec![nodes[0].len()], vec![nodes[1].len()]],
        coarsening_seconds: 0.0,
        validation,
    })
}

/// Metrics of `model` on a labelled test set.
pub fn predict_final(model: &TrainedModel, test: &Dataset) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let pred = model.predict_dataset(test)?;
    compute_metrics(&pred, test.labels())
}

/// Per-level CSV `level,n_plus,n_minus,n_train,refined,log2Cplus,log2Cminus,log2gamma,n_sv,kappa_val,seconds`.
pub fn write_level_report(report: &[LevelReport], out: impl Write) -> Result<()> {
    let err = |e: csv::Error| Error::Internal(format!("writing report: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "level",
        "n_plus",
        "n_minus",
        "n_train",
        "refined",
        "log2Cplus",
        "log2Cminus",
        "log2gamma",
        "n_sv",
        "kappa_val",
        "seconds",
    ])
    .map_err(err)?;
    for r in report {
        w.write_record([
            r.level.to_string(),
            r.n_plus.to_string(),
            r.n_minus.to_string(),
            r.n_train().to_string(),
            r.refined.to_string(),
            r.params.c_plus.log2().to_string(),
            r.params.c_minus.log2().to_string(),
            r.params.gamma.log2().to_string(),
            r.n_sv.to_string(),
            r.kappa_val.map(|k| k.to_string()).unwrap_or_default(),
            format!("{:.6}", r.seconds),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("writing report: {e}")))
}
