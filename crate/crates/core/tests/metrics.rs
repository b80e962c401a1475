use hmc_lab::metrics::{
    distance, prokhorov_upper, w1_assignment, w1_exact_1d, w1_sliced, DistanceMethod, SampleBatch,
};
use proptest::prelude::*;

fn batch(n: usize, d: usize) -> impl Strategy<Value = Points> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n)
}

type Points = Vec<Vec<f64>>;

fn triple() -> impl Strategy<Value = (Points, Points, Points)> {
    (1usize..8, 1usize..4).prop_flat_map(|(n, d)| (batch(n, d), batch(n, d), batch(n, d)))
}

fn sb(points: &[Vec<f64>]) -> SampleBatch {
    SampleBatch::new(points.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn assignment_distance_is_a_metric((a, b, c) in triple()) {
        let (a, b, c) = (sb(&a), sb(&b), sb(&c));
        let ab = w1_assignment(&a, &b).unwrap();
        prop_assert_eq!(ab, w1_assignment(&b, &a).unwrap());
        prop_assert_eq!(w1_assignment(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        let ac = w1_assignment(&a, &c).unwrap();
        let cb = w1_assignment(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }

    #[test]
    fn distinct_batches_have_positive_distance((a, b, _) in triple()) {
        let mut sa = a.clone();
        let mut sb_ = b.clone();
        sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sb_.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assume!(sa != sb_);
        prop_assert!(w1_assignment(&sb(&a), &sb(&b)).unwrap() > 0.0);
    }

    #[test]
    fn sliced_never_exceeds_assignment((a, b, _) in triple(), seed in 0u64..1000) {
        let (a, b) = (sb(&a), sb(&b));
        prop_assert!(w1_sliced(&a, &b, 32, seed).unwrap() <= w1_assignment(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn one_dimensional_methods_agree(a in prop::collection::vec(-5.0f64..5.0, 1..40), shift in -2.0f64..2.0) {
        let b: Vec<f64> = a.iter().rev().map(|v| v * 0.5 + shift).collect();
        let (ba, bb) = (SampleBatch::from_scalars(&a).unwrap(), SampleBatch::from_scalars(&b).unwrap());
        let exact = w1_exact_1d(&a, &b).unwrap();
        prop_assert!((w1_assignment(&ba, &bb).unwrap() - exact).abs() <= 1e-12);
        prop_assert!((w1_sliced(&ba, &bb, 4, 0).unwrap() - exact).abs() <= 1e-12);
    }

    #[test]
    fn prokhorov_bound_is_monotone_in_w1((a, b, c) in triple()) {
        let (a, b, c) = (sb(&a), sb(&b), sb(&c));
        let (wab, wac) = (w1_assignment(&a, &b).unwrap(), w1_assignment(&a, &c).unwrap());
        let (pab, pac) = (prokhorov_upper(&a, &b).unwrap(), prokhorov_upper(&a, &c).unwrap());
        prop_assert_eq!(wab <= wac, pab <= pac);
    }

    #[test]
    fn translation_moves_w1_by_the_shift_length(a in batch(6, 2), dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
        let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + dx, p[1] + dy]).collect();
        let w = w1_assignment(&sb(&a), &sb(&b)).unwrap();
        prop_assert!((w - (dx * dx + dy * dy).sqrt()).abs() <= 1e-9);
    }
}

#[test]
fn distance_picks_the_method_by_shape() {
    let one = SampleBatch::from_scalars(&[0.0, 1.0]).unwrap();
    assert_eq!(
        distance(&one, &one, 8, 0).unwrap().method,
        DistanceMethod::Exact1d
    );
    let two = sb(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
    let r = distance(&two, &sb(&[vec![1.0, 1.0], vec![0.0, 2.0]]), 8, 0).unwrap();
    assert_eq!(r.method, DistanceMethod::Assignment);
    assert_eq!(r.w1, 1.0);
    assert_eq!(r.prokhorov_upper, 1.0);
}

#[test]
fn mismatched_batches_are_rejected() {
    assert!(w1_assignment(&sb(&[vec![0.0]]), &sb(&[vec![0.0], vec![1.0]])).is_err());
    assert!(w1_assignment(&sb(&[vec![0.0]]), &sb(&[vec![0.0, 1.0]])).is_err());
    assert!(SampleBatch::new(vec![]).is_err());
    assert!(SampleBatch::new(vec![vec![f64::NAN]]).is_err());
}
