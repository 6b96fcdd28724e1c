//! SMO solver for the dual of the weighted soft-margin SVM:
//!
//! `min 1/2 a^T Q a - e^T a`  s.t.  `y^T a = 0`, `0 <= a_i <= box_i`,
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)` and `box_i = C(y_i) * weight_i`.

use super::cache::RowCache;
use super::kernel::rbf_kernel;
use super::model::{ModelParams, TrainedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop when the maximal KKT violation `m - M` is at most this.
    pub tol: f64,
    /// Pair updates before giving up.
    pub max_iter: usize,
    pub cache_bytes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Final `m - M`.
    pub violation: f64,
    /// Dual objective in minimization form.
    pub objective: f64,
}

/// Trains on `ds` with optional per-row weights scaling the box constraints.
pub fn train(ds: &Dataset, weights: Option<&[f64]>, params: &ModelParams, cfg: &SolverConfig) -> Result<TrainedModel> {
    train_with_stats(ds, weights, params, cfg).map(|(m, _)| m)
}

pub fn train_with_stats(
    ds: &Dataset,
    weights: Option<&[f64]>,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(TrainedModel, SolverStats)> {
    params.validate()?;
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be positive", cfg.tol)));
    }
    if ds.n_plus() == 0 || ds.n_minus() == 0 {
        return Err(Error::Domain("training data must contain both classes".into()));
    }
    let n = ds.len();
    let bounds: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::InvalidInput(format!("{} weights for {n} rows", w.len())));
            }
            if let Some(v) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidInput(format!("instance weight {v} must be positive")));
            }
            (0..n).map(|i| params.penalty(ds.label(i)) * w[i]).collect()
        }
        None => (0..n).map(|i| params.penalty(ds.label(i))).collect(),
    };
    let mut s = Smo::new(ds, bounds, params.gamma, cfg.cache_bytes);
    let outcome = s.solve(cfg);
    let stats = SolverStats {
        iterations: s.iterations,
        violation: s.violation,
        objective: s.objective(),
    };
    let model = s.into_model(ds, *params);
    match outcome {
        Ok(()) => Ok((model, stats)),
        Err(()) => Err(Error::NotConverged {
            iterations: stats.iterations,
            violation: stats.violation,
            best: Box::new(model),
        }),
    }
}

struct Smo<'a> {
    ds: &'a Dataset,
    y: Vec<f64>,
    bounds: Vec<f64>,
    gamma: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
    cache: RowCache,
    iterations: usize,
    violation: f64,
}

impl<'a> Smo<'a> {
    fn new(ds: &'a Dataset, bounds: Vec<f64>, gamma: f64, cache_bytes: usize) -> Self {
        let n = ds.len();
        let diag = (0..n).map(|i| rbf_kernel(ds.row(i), ds.row(i), gamma)).collect();
        Smo {
            ds,
            y: ds.labels().iter().map(|&l| f64::from(l)).collect(),
            bounds,
            gamma,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
            diag,
            cache: RowCache::new(n, n, cache_bytes),
            iterations: 0,
            violation: f64::INFINITY,
        }
    }

    fn q_row(&mut self, i: usize) -> &[f64] {
        q_row(&mut self.cache, self.ds, &self.y, self.gamma, i)
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.bounds[t]
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.bounds[t]
        }
    }

    /// Maximal violating pair `(i, j)` and the gap `m - M`.
    fn select(&self) -> (usize, usize, f64) {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..self.alpha.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > m {
                m = v;
                i = t;
            }
            if self.in_low(t) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        (i, j, m - big_m)
    }

    fn solve(&mut self, cfg: &SolverConfig) -> std::result::Result<(), ()> {
        loop {
            let (i, j, gap) = self.select();
            self.violation = gap;
            if i == usize::MAX || j == usize::MAX || gap <= cfg.tol {
                return Ok(());
            }
            if self.iterations >= cfg.max_iter {
                return Err(());
            }
            self.iterations += 1;
            self.update_pair(i, j);
        }
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let q_ij = self.q_row(i)[j];
        let (ci, cj) = (self.bounds[i], self.bounds[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let (gi, gj) = (self.grad[i], self.grad[j]);
        if self.y[i] != self.y[j] {
            let quad = (self.diag[i] + self.diag[j] + 2.0 * q_ij).max(TAU);
            let delta = (-gi - gj) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = (self.diag[i] + self.diag[j] - 2.0 * q_ij).max(TAU);
            let delta = (gi - gj) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        if cfg!(debug_assertions) {
            let change = gi * di
                + gj * dj
                + 0.5 * (self.diag[i] * di * di + self.diag[j] * dj * dj)
                + q_ij * di * dj;
            let scale = 1.0 + gi.abs() * di.abs() + gj.abs() * dj.abs();
            debug_assert!(change <= 1e-9 * scale, "dual objective increased by {change}");
        }
        for (t, dt) in [(i, di), (j, dj)] {
            if dt != 0.0 {
                let row = q_row(&mut self.cache, self.ds, &self.y, self.gamma, t);
                self.grad.iter_mut().zip(row).for_each(|(g, q)| *g += q * dt);
            }
        }
    }

    fn objective(&self) -> f64 {
        0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    }

    /// Offset `rho` with `f(x) = sum - rho`: mean of `y_i G_i` over free
    /// variables, else the midpoint of the interval allowed by bounded ones.
    fn rho(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.bounds[t];
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                free_sum += yg;
            }
        }
        if n_free > 0 {
            free_sum / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }

    fn into_model(mut self, ds: &Dataset, params: ModelParams) -> TrainedModel {
        let bias = -self.rho();
        let d = ds.n_features();
        let sv_indices: Vec<usize> = (0..self.alpha.len()).filter(|&t| self.alpha[t] > 0.0).collect();
        let mut support_vectors = Vec::with_capacity(sv_indices.len() * d);
        let mut dual_coefs = Vec::with_capacity(sv_indices.len());
        for &t in &sv_indices {
            support_vectors.extend_from_slice(ds.row(t));
            dual_coefs.push(self.alpha[t] * self.y[t]);
        }
        self.alpha.clear();
        TrainedModel {
            support_vectors,
            n_features: d,
            dual_coefs,
            bias,
            params,
            sv_indices,
        }
    }
}

fn q_row<'c>(cache: &'c mut RowCache, ds: &Dataset, y: &[f64], gamma: f64, i: usize) -> &'c [f64] {
    cache.get_or_fill(i, |row| {
        let xi = ds.row(i);
        for (j, q) in row.iter_mut().enumerate() {
            *q = y[i] * y[j] * rbf_kernel(xi, ds.row(j), gamma);
        }
    })
}
