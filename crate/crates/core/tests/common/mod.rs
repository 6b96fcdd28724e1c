//! Independent reference solvers and generators shared by the test targets.
#![allow(dead_code)]

pub mod coarsening;

use amgsvm::svm::{rbf_kernel, ModelParams, TrainedModel};
use amgsvm::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub ds: Dataset,
    pub params: ModelParams,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=50);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let shift = rng.gen_range(0.0..0.6);
    for i in 0..n {
        let y: i8 = if i % 3 == 0 { 1 } else { -1 };
        let c = if y > 0 { 0.5 + shift / 2.0 } else { 0.5 - shift / 2.0 };
        rows.push(vec![c + rng.gen_range(-0.4..0.4), rng.gen_range(0.0..1.0)]);
        labels.push(y);
    }
    let params = ModelParams::new(
        2f64.powf(rng.gen_range(-2.0..6.0)),
        2f64.powf(rng.gen_range(-2.0..6.0)),
        2f64.powf(rng.gen_range(-1.0..4.0)),
    )
    .unwrap();
    Instance {
        ds: Dataset::from_rows(&rows, &labels).unwrap(),
        params,
    }
}

pub fn q_matrix(ds: &Dataset, gamma: f64) -> Vec<Vec<f64>> {
    let n = ds.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f64::from(ds.label(i)) * f64::from(ds.label(j)) * rbf_kernel(ds.row(i), ds.row(j), gamma))
                .collect()
        })
        .collect()
}

pub fn objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * q[i][j] * a[j];
        }
    }
    0.5 * s - a.iter().sum::<f64>()
}

/// Euclidean projection onto `{0 <= a <= c, y^T a = 0}` by bisection on the
/// multiplier of the equality.
pub fn project(z: &[f64], y: &[f64], c: &[f64]) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { z.iter().zip(y).zip(c).map(|((zi, yi), ci)| (zi - lam * yi).clamp(0.0, *ci)).collect() };
    let g = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = z.iter().chain(c).fold(0.0f64, |m, v| m.max(v.abs())) * 2.0 + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
pub fn reference_dual(ds: &Dataset, params: &ModelParams) -> (Vec<f64>, f64) {
    let q = q_matrix(ds, params.gamma);
    let n = ds.len();
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let c: Vec<f64> = ds.labels().iter().map(|&l| params.penalty(l)).collect();
    let lipschitz = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut a = vec![0.0; n];
    let mut v = a.clone();
    let mut t = 1.0f64;
    for _ in 0..60_000 {
        let grad: Vec<f64> = (0..n).map(|i| q[i].iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() - 1.0).collect();
        let z: Vec<f64> = v.iter().zip(&grad).map(|(vi, gi)| vi - step * gi).collect();
        let next = project(&z, &y, &c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        // restart when the objective goes up
        if objective(&q, &next) > objective(&q, &a) {
            t = 1.0;
            v = a.clone();
            continue;
        }
        let moved = next.iter().zip(&a).map(|(x, xo)| (x - xo).abs()).fold(0.0, f64::max);
        v = next.iter().zip(&a).map(|(x, xo)| x + mom * (x - xo)).collect();
        a = next;
        t = t_next;
        if moved < 1e-13 {
            break;
        }
    }
    let obj = objective(&q, &a);
    (a, obj)
}

/// Bias from a dual vector: mean over free variables of `y_i - sum_j a_j y_j K_ij`.
pub fn reference_bias(ds: &Dataset, params: &ModelParams, a: &[f64]) -> f64 {
    let n = ds.len();
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let f = |i: usize| (0..n).map(|j| a[j] * y[j] * rbf_kernel(ds.row(j), ds.row(i), params.gamma)).sum::<f64>();
    let mut free = Vec::new();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let c = params.penalty(ds.label(i));
        let r = y[i] - f(i);
        let eps = 1e-7 * c;
        if a[i] > eps && a[i] < c - eps {
            free.push(r);
        } else if (a[i] <= eps) == (y[i] > 0.0) {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    if free.is_empty() {
        0.5 * (lo + hi)
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    }
}

pub fn smo_objective(model: &TrainedModel, ds: &Dataset) -> f64 {
    let mut a = vec![0.0; ds.len()];
    for (s, &i) in model.sv_indices.iter().enumerate() {
        a[i] = model.dual_coefs[s].abs();
    }
    objective(&q_matrix(ds, model.params.gamma), &a)
}

pub fn probe_grid() -> Vec<[f64; 2]> {
    (0..10)
        .flat_map(|i| (0..10).map(move |j| [(i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0]))
        .collect()
}

/// Checks KKT conditions of `model` at `tol` on its training set.
pub fn kkt_violations(model: &TrainedModel, ds: &Dataset, tol: f64) -> Vec<String> {
    let mut alpha = vec![0.0; ds.len()];
    for (s, &i) in model.sv_indices.iter().enumerate() {
        alpha[i] = model.dual_coefs[s].abs();
    }
    let mut bad = Vec::new();
    for i in 0..ds.len() {
        let y = f64::from(ds.label(i));
        let yf = y * model.decision_value(ds.row(i)).unwrap();
        let c = model.params.penalty(ds.label(i));
        let ok = if alpha[i] == 0.0 {
            yf >= 1.0 - tol
        } else if alpha[i] < c {
            (yf - 1.0).abs() <= tol
        } else {
            yf <= 1.0 + tol
        };
        if !ok {
            bad.push(format!("row {i}: alpha {} of {c}, y f = {yf}", alpha[i]));
        }
    }
    bad
}


/// Two spherical Gaussian classes, positives first.
///
/// Positives have mean `shift * e_1` and standard deviation `sd_plus`;
/// negatives are centred at the origin with unit deviation.
pub fn gaussian_classes(n_plus: usize, n_minus: usize, d: usize, shift: f64, sd_plus: f64, seed: u64) -> Dataset {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity((n_plus + n_minus) * d);
    let mut labels = Vec::with_capacity(n_plus + n_minus);
    for i in 0..n_plus + n_minus {
        let positive = i < n_plus;
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            points.push(if positive { sd_plus * z + if j == 0 { shift } else { 0.0 } } else { z });
        }
        labels.push(if positive { 1 } else { -1 });
    }
    Dataset::new(points, labels, d).unwrap()
}

/// SMO against the dense reference on instances `seeds`: relative objective
/// gap within 1e-4, equal signs on the probe grid, KKT at 1e-3. Returns the
/// worst gap.
pub fn solver_oracle_suite(seeds: std::ops::Range<u64>) -> Result<f64, String> {
    use amgsvm::svm::{train_with_stats, SolverConfig};
    let probes = probe_grid();
    let mut worst: f64 = 0.0;
    for seed in seeds {
        let inst = random_instance(seed);
        let (model, stats) =
            train_with_stats(&inst.ds, None, &inst.params, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let (a_ref, obj_ref) = reference_dual(&inst.ds, &inst.params);
        let obj = smo_objective(&model, &inst.ds);
        if (obj - stats.objective).abs() > 1e-9 * obj.abs().max(1.0) {
            return Err(format!("seed {seed}: reported objective {} vs recomputed {obj}", stats.objective));
        }
        let rel = (obj - obj_ref).abs() / obj_ref.abs().max(1e-12);
        worst = worst.max(rel);
        if rel > 1e-4 {
            return Err(format!("seed {seed}: smo {obj} vs reference {obj_ref}"));
        }
        let b_ref = reference_bias(&inst.ds, &inst.params, &a_ref);
        for x in &probes {
            let f_ref: f64 = (0..inst.ds.len())
                .map(|j| a_ref[j] * f64::from(inst.ds.label(j)) * rbf_kernel(inst.ds.row(j), x, inst.params.gamma))
                .sum::<f64>()
                + b_ref;
            let p_ref = if f_ref >= 0.0 { 1 } else { -1 };
            if model.predict(x).map_err(|e| e.to_string())? != p_ref {
                return Err(format!("seed {seed}, probe {x:?}: reference f = {f_ref}"));
            }
        }
        let v = kkt_violations(&model, &inst.ds, 1e-3);
        if !v.is_empty() {
            return Err(format!("seed {seed}: {v:?}"));
        }
    }
    Ok(worst)
}
