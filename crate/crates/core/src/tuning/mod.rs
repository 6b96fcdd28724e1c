//! Two-stage uniform-design search over `(C, gamma)` scored by
//! cross-validated G-mean.

mod ud;

use std::io::Write;

pub use ud::{ud_points, ud_table, Rect, SUPPORTED_RUNS};

use crate::data::{Dataset, Fold};
use crate::error::{Error, Result};
use crate::metrics::compute_metrics;
use crate::svm::{self, ModelParams, SolverConfig, TrainedModel};

/// How the two class penalties derive from the searched `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightRule {
    /// `C+ = C * n- / n+`, `C- = C`.
    ImbalanceRatio,
    /// `C+ = C * r`, `C- = C`.
    Fixed(f64),
}

impl WeightRule {
    pub fn params(&self, c: f64, gamma: f64, n_plus: usize, n_minus: usize) -> ModelParams {
        let ratio = match *self {
            WeightRule::ImbalanceRatio => n_minus as f64 / n_plus as f64,
            WeightRule::Fixed(r) => r,
        };
        ModelParams {
            c_plus: c * ratio,
            c_minus: c,
            gamma,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchDomain {
    pub rect: Rect,
    pub stage1_runs: usize,
    pub stage2_runs: usize,
    pub weight_rule: WeightRule,
}

impl Default for SearchDomain {
    fn default() -> Self {
        SearchDomain {
            rect: Rect {
                log2_c: (-5.0, 15.0),
                log2_gamma: (-15.0, 3.0),
            },
            stage1_runs: 9,
            stage2_runs: 5,
            weight_rule: WeightRule::ImbalanceRatio,
        }
    }
}

impl SearchDomain {
    pub fn validate(&self) -> Result<()> {
        self.rect.validate()?;
        ud_table(self.stage1_runs)?;
        ud_table(self.stage2_runs)?;
        if let WeightRule::Fixed(r) = self.weight_rule {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("weight ratio {r} must be positive")));
            }
        }
        Ok(())
    }

    /// Whether `params` lies in the domain, judged on `(log2 C-, log2 gamma)`.
    pub fn contains(&self, params: &ModelParams) -> bool {
        self.rect.contains(params.c_minus.log2(), params.gamma.log2())
    }

    /// Solver calls made by one [`tune`] call.
    pub fn budget(&self, n_folds: usize) -> usize {
        (self.stage1_runs + self.stage2_runs) * n_folds + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub stage: u8,
    pub log2_c: f64,
    pub log2_gamma: f64,
    pub params: ModelParams,
    pub kappa: f64,
}

#[derive(Clone, Debug)]
pub struct TuningResult {
    pub best_params: ModelParams,
    pub best_kappa: f64,
    pub best_model: TrainedModel,
    pub evaluations: Vec<Evaluation>,
    /// Solver calls made, including the final refit.
    pub trainings: usize,
}

/// Solver settings and optional per-row box weights for a tuning run.
#[derive(Clone, Copy, Debug)]
pub struct TuneOptions<'a> {
    pub solver: SolverConfig,
    pub weights: Option<&'a [f64]>,
}

impl Default for TuneOptions<'_> {
    fn default() -> Self {
        TuneOptions {
            solver: SolverConfig::default(),
            weights: None,
        }
    }
}

/// Mean validation G-mean of `params` over `folds`.
pub fn cross_validate(train: &Dataset, folds: &[Fold], params: &ModelParams, opts: &TuneOptions) -> Result<f64> {
    if folds.is_empty() {
        return Err(Error::InvalidInput("no folds".into()));
    }
    let mut sum = 0.0;
    for fold in folds {
        let fit = train.subset(&fold.train);
        let w: Option<Vec<f64>> = opts.weights.map(|w| fold.train.iter().map(|&i| w[i]).collect());
        let model = svm::train(&fit, w.as_deref(), params, &opts.solver)?;
        let val = train.subset(&fold.validation);
        let pred = model.predict_dataset(&val)?;
        sum += compute_metrics(&pred, val.labels())?.kappa;
    }
    Ok(sum / folds.len() as f64)
}

fn better(a: &Evaluation, b: &Evaluation) -> bool {
    if a.kappa != b.kappa {
        return a.kappa > b.kappa;
    }
    if a.log2_c != b.log2_c {
        return a.log2_c < b.log2_c;
    }
    a.log2_gamma < b.log2_gamma
}

/// Uniform-design model selection.
///
/// Stage 1 covers the whole domain, or with a `center` a box of half the
/// domain's side lengths around it. Stage 2 covers a quarter-side box around
/// the stage-1 winner. Both boxes are clipped to the domain. The winner is
/// refitted on all of `train`.
pub fn tune(
    train: &Dataset,
    folds: &[Fold],
    domain: &SearchDomain,
    center: Option<&ModelParams>,
    opts: &TuneOptions,
) -> Result<TuningResult> {
    domain.validate()?;
    if train.n_plus() == 0 || train.n_minus() == 0 {
        return Err(Error::Domain("tuning data must contain both classes".into()));
    }
    let (n_plus, n_minus) = (train.n_plus(), train.n_minus());
    let mut evaluations = Vec::new();
    let mut trainings = 0usize;
    let mut best: Option<Evaluation> = None;

    let stage1_rect = match center {
        Some(c) => domain.rect.sub_rect((c.c_minus.log2(), c.gamma.log2()), 0.5),
        None => domain.rect,
    };
    for stage in [1u8, 2] {
        let (rect, runs) = if stage == 1 {
            (stage1_rect, domain.stage1_runs)
        } else {
            let w = best.as_ref().expect("stage 1 produced a candidate");
            (domain.rect.sub_rect((w.log2_c, w.log2_gamma), 0.25), domain.stage2_runs)
        };
        for (log2_c, log2_gamma) in ud_points(&rect, runs)? {
            let params = domain
                .weight_rule
                .params(log2_c.exp2(), log2_gamma.exp2(), n_plus, n_minus);
            trainings += folds.len();
            let kappa = match cross_validate(train, folds, &params, opts) {
                Ok(k) => k,
                Err(e) => {
                    log::warn!("candidate log2C={log2_c:.3} log2g={log2_gamma:.3} failed: {e}");
                    0.0
                }
            };
            let eval = Evaluation {
                stage,
                log2_c,
                log2_gamma,
                params,
                kappa,
            };
            if best.as_ref().map_or(true, |b| better(&eval, b)) {
                best = Some(eval.clone());
            }
            evaluations.push(eval);
        }
    }
    let best = best.expect("at least one candidate");
    trainings += 1;
    let best_model = match svm::train(train, opts.weights, &best.params, &opts.solver) {
        Ok(m) => m,
        Err(Error::NotConverged { best: m, violation, .. }) => {
            log::warn!("final refit stopped at violation {violation:.3e}; keeping last iterate");
            *m
        }
        Err(e) => return Err(e),
    };
    Ok(TuningResult {
        best_params: best.params,
        best_kappa: best.kappa,
        best_model,
        evaluations,
        trainings,
    })
}

/// CSV trace `stage,log2C,log2gamma,Cplus,Cminus,kappa_mean`.
pub fn write_trace(evaluations: &[Evaluation], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Internal(format!("writing trace: {e}"));
    w.write_record(["stage", "log2C", "log2gamma", "Cplus", "Cminus", "kappa_mean"])
        .map_err(err)?;
    for e in evaluations {
        w.write_record([
            e.stage.to_string(),
            e.log2_c.to_string(),
            e.log2_gamma.to_string(),
            e.params.c_plus.to_string(),
            e.params.c_minus.to_string(),
            e.kappa.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("writing trace: {e}")))
}
