use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Half-up rounding of a non-negative value.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Splits row indices into (train, test), class by class. Each class sends
/// `round_half_up(test_fraction * |class|)` rows to the test side.
pub fn stratified_split_indices(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction {test_fraction} not in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [1i8, -1] {
        let mut idx = ds.class_indices(label);
        if idx.len() < 2 {
            return Err(Error::Domain(format!(
                "class {label:+} has {} rows; cannot stratify",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_test = round_half_up(test_fraction * idx.len() as f64).min(idx.len());
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_split_indices(ds, test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition of the row indices of `ds`.
///
/// Rows of each class are shuffled and dealt round-robin; the negative class
/// continues where the positive one stopped so fold sizes stay balanced.
pub fn k_fold_indices(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k = {k}; need at least 2 folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; ds.len()];
    let mut offset = 0;
    for label in [1i8, -1] {
        let mut idx = ds.class_indices(label);
        if idx.len() < k {
            return Err(Error::Domain(format!(
                "class {label:+} has {} rows, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = (offset + pos) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train) = (0..ds.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}
