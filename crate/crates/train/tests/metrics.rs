use compol_train::{mean_std, relative_l2, Affine};
use proptest::prelude::*;

#[test]
fn hand_computed_errors() {
    let target = [3.0, 4.0, 1.0, 0.0];
    let pred = [0.0, 0.0, 1.0, 1.0];
    let e = relative_l2(&pred, &target, 2).unwrap();
    assert_eq!(e.per_sample, vec![1.0, 1.0]);
    assert!(!e.zero_norm);
    let exact = relative_l2(&target, &target, 1).unwrap();
    assert_eq!(exact.per_sample, vec![0.0]);
}

#[test]
fn zero_norm_targets_use_absolute_error() {
    let e = relative_l2(&[3.0, 4.0, 2.0, 0.0], &[0.0, 0.0, 1.0, 0.0], 2).unwrap();
    assert!(e.zero_norm);
    assert_eq!(e.per_sample, vec![5.0, 1.0]);
}

#[test]
fn shape_mismatch_is_rejected() {
    assert!(relative_l2(&[1.0, 2.0], &[1.0], 1).is_err());
    assert!(relative_l2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 2).is_err());
    assert!(relative_l2(&[], &[], 0).is_err());
}

#[test]
fn mean_and_population_std() {
    assert_eq!(
        mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]),
        (5.0, 2.0)
    );
    assert_eq!(mean_std(&[0.3; 5]).1, 0.0);
    assert!(mean_std(&[]).0.is_nan());
}

proptest! {
    #[test]
    fn relative_error_is_scale_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, 0.5f64..10.0), 1..40),
        c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
    ) {
        let pred: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let target: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let a = relative_l2(&pred, &target, 1).unwrap().per_sample[0];
        let sp: Vec<f64> = pred.iter().map(|x| x * c).collect();
        let st: Vec<f64> = target.iter().map(|x| x * c).collect();
        let b = relative_l2(&sp, &st, 1).unwrap().per_sample[0];
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn standardization_round_trips(x in -1e3f64..1e3, mean in -50.0f64..50.0, std in 1e-3f64..1e2) {
        let a = Affine { mean, std };
        prop_assert!((a.inverse(a.forward(x)) - x).abs() <= 1e-6);
    }
}
