use std::str::FromStr;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    None,
    #[default]
    MinMax,
    ZScore,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "minmax" => Ok(Normalization::MinMax),
            "zscore" => Ok(Normalization::ZScore),
            other => Err(Error::InvalidInput(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Per-column affine map `x -> (x - offset) * scale` fitted on training data.
/// Constant columns get `scale = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationParams {
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl NormalizationParams {
    pub fn identity(d: usize) -> Self {
        NormalizationParams {
            offsets: vec![0.0; d],
            scales: vec![1.0; d],
        }
    }

    /// Maps row-major `points` in place.
    pub fn apply_points(&self, points: &mut [f64]) {
        let d = self.offsets.len();
        if d == 0 {
            return;
        }
        for row in points.chunks_exact_mut(d) {
            for (x, (&o, &s)) in row.iter_mut().zip(self.offsets.iter().zip(&self.scales)) {
                *x = (*x - o) * s;
            }
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let d = self.offsets.len();
        if ds.n_features() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ds.n_features(),
            });
        }
        let points = ds
            .points()
            .chunks_exact(d.max(1))
            .flat_map(|row| {
                row.iter()
                    .zip(self.offsets.iter().zip(&self.scales))
                    .map(|(&x, (&o, &s))| (x - o) * s)
            })
            .collect();
        Dataset::new(points, ds.labels().to_vec(), d)
    }
}

pub fn normalize_features(ds: &Dataset, mode: Normalization) -> Result<(Dataset, NormalizationParams)> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("cannot normalize an empty dataset".into()));
    }
    let d = ds.n_features();
    let params = match mode {
        Normalization::None => NormalizationParams::identity(d),
        Normalization::MinMax => {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for row in ds.rows() {
                for (j, &x) in row.iter().enumerate() {
                    lo[j] = lo[j].min(x);
                    hi[j] = hi[j].max(x);
                }
            }
            let scales = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| if h > l { 1.0 / (h - l) } else { 0.0 })
                .collect();
            NormalizationParams { offsets: lo, scales }
        }
        Normalization::ZScore => {
            let n = ds.len() as f64;
            let mut mean = vec![0.0; d];
            for row in ds.rows() {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; d];
            for row in ds.rows() {
                for j in 0..d {
                    var[j] += (row[j] - mean[j]).powi(2);
                }
            }
            let scales = var
                .iter()
                .map(|v| {
                    let sd = (v / n).sqrt();
                    if sd > 0.0 {
                        1.0 / sd
                    } else {
                        0.0
                    }
                })
                .collect();
            NormalizationParams {
                offsets: mean,
                scales,
            }
        }
    };
    let out = params.apply(ds)?;
    Ok((out, params))
}
