//! Labeled datasets, file formats, preprocessing and splits.

mod io;
mod normalize;
mod split;

pub use io::{csv_columns, load_dataset, load_samples, save_sparse, write_sparse, Format, Samples};
pub use normalize::{normalize_features, NormalizationParams, Normalization};
pub use split::{k_fold_indices, stratified_split, stratified_split_indices, Fold};

use crate::error::{Error, Result};

/// Dense row-major feature matrix with ±1 labels.
///
/// Rows are stored densely; the sparse text format is only an on-disk
/// representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    labels: Vec<i8>,
    n_features: usize,
}

impl Dataset {
    pub fn new(points: Vec<f64>, labels: Vec<i8>, n_features: usize) -> Result<Self> {
        if points.len() != labels.len() * n_features {
            return Err(Error::InvalidInput(format!(
                "{} values do not form {} rows of {} features",
                points.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::Domain(format!("label {bad} is not -1 or +1")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature value".into()));
        }
        Ok(Dataset {
            points,
            labels,
            n_features,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[i8]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput("row and label counts differ".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        Dataset::new(rows.concat(), labels.to_vec(), d)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Row-major feature values, `len() * n_features()` entries.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn n_plus(&self) -> usize {
        self.labels.iter().filter(|&&y| y > 0).count()
    }

    pub fn n_minus(&self) -> usize {
        self.len() - self.n_plus()
    }

    /// Fraction of rows in the larger class.
    pub fn imbalance_ratio(&self) -> f64 {
        let p = self.n_plus();
        p.max(self.len() - p) as f64 / self.len() as f64
    }

    /// Indices of the rows carrying `label`, ascending.
    pub fn class_indices(&self, label: i8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut points = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            points.extend_from_slice(self.row(i));
        }
        Dataset {
            points,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_features: self.n_features,
        }
    }

    /// Widens the feature space with zero columns (sparse files may omit
    /// trailing features).
    pub fn with_n_features(self, d: usize) -> Result<Dataset> {
        if d < self.n_features {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.n_features,
            });
        }
        if d == self.n_features {
            return Ok(self);
        }
        let mut points = Vec::with_capacity(self.len() * d);
        for i in 0..self.len() {
            points.extend_from_slice(self.row(i));
            points.resize((i + 1) * d, 0.0);
        }
        Ok(Dataset {
            points,
            labels: self.labels,
            n_features: d,
        })
    }

    /// Concatenates two datasets with the same feature count.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_features != other.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: other.n_features,
            });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset {
            points,
            labels,
            n_features: self.n_features,
        })
    }
}
