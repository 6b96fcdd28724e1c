//! Confusion-matrix metrics for binary ±1 classification.

use crate::error::{Error, Result};

/// Counts and rates of a binary classifier; +1 is the positive class.
///
/// `kappa` is the geometric mean of sensitivity and specificity. A rate whose
/// denominator is zero is reported as 0 and flagged.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub sn: f64,
    pub sp: f64,
    pub acc: f64,
    pub kappa: f64,
    pub sn_undefined: bool,
    pub sp_undefined: bool,
}

impl Metrics {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Metrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (sn, sn_undefined) = ratio(tp, tp + fn_);
        let (sp, sp_undefined) = ratio(tn, tn + fp);
        let (acc, _) = ratio(tp + tn, tp + tn + fp + fn_);
        Metrics {
            tp,
            tn,
            fp,
            fn_,
            sn,
            sp,
            acc,
            kappa: (sn * sp).sqrt(),
            sn_undefined,
            sp_undefined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn compute_metrics(predicted: &[i8], actual: &[i8]) -> Result<Metrics> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (1, 1) => tp += 1,
            (-1, -1) => tn += 1,
            (1, -1) => fp += 1,
            (-1, 1) => fn_ += 1,
            _ => return Err(Error::Domain(format!("labels must be ±1, got ({p}, {a})"))),
        }
    }
    Ok(Metrics::from_counts(tp, tn, fp, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        let m = Metrics::from_counts(9, 80, 10, 1);
        assert!((m.sn - 0.9).abs() < 1e-15);
        assert!((m.sp - 80.0 / 90.0).abs() < 1e-15);
        // sqrt(0.9 * 8/9) = sqrt(0.8)
        assert!((m.kappa - 0.894_427_190_999_915_9).abs() < 1e-12);
        assert!((m.acc - 0.89).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction() {
        let y = [1, -1, 1, -1, -1];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.sn, m.sp, m.acc, m.kappa), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_negative_predictions() {
        let m = compute_metrics(&[-1, -1, -1], &[1, -1, -1]).unwrap();
        assert_eq!(m.sn, 0.0);
        assert_eq!(m.kappa, 0.0);
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let m = compute_metrics(&[-1, -1], &[-1, -1]).unwrap();
        assert!(m.sn_undefined);
        assert!(!m.sp_undefined);
        assert_eq!(m.sn, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[1], &[1, -1]).is_err());
    }
}
