use amgsvm::{compute_metrics, Metrics};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kappa_and_accuracy_identities(tp in 0usize..5000, tn in 0usize..5000, fp in 0usize..5000, fn_ in 0usize..5000) {
        prop_assume!(tp + tn + fp + fn_ > 0);
        let m = Metrics::from_counts(tp, tn, fp, fn_);
        prop_assert!((m.kappa * m.kappa - m.sn * m.sp).abs() <= 1e-12);
        let acc = (tp + tn) as f64 / (tp + tn + fp + fn_) as f64;
        prop_assert!((m.acc - acc).abs() <= 1e-12);
        if tp + fn_ > 0 {
            prop_assert!((m.sn - tp as f64 / (tp + fn_) as f64).abs() <= 1e-12);
        }
        if tn + fp > 0 {
            prop_assert!((m.sp - tn as f64 / (tn + fp) as f64).abs() <= 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&m.kappa));
    }

    #[test]
    fn counts_from_label_vectors(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
        let to_label = |b: bool| if b { 1i8 } else { -1 };
        let pred: Vec<i8> = pairs.iter().map(|p| to_label(p.0)).collect();
        let actual: Vec<i8> = pairs.iter().map(|p| to_label(p.1)).collect();
        let m = compute_metrics(&pred, &actual).unwrap();
        let count = |a: bool, b: bool| pairs.iter().filter(|&&p| p == (a, b)).count();
        prop_assert_eq!(m, Metrics::from_counts(count(true, true), count(false, false), count(true, false), count(false, true)));
        prop_assert_eq!(m.total(), pairs.len());
    }
}
