use delta_sampling::estimator::{estimate_curve, windowed_min_mean, EstimatorError, SamplePool};
use proptest::prelude::*;

fn pool(v: &[i64]) -> SamplePool {
    SamplePool::new(v.to_vec()).unwrap()
}

#[test]
fn four_value_fixture() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/pools/four_values.csv"
    );
    let p = SamplePool::read(path.as_ref()).unwrap();
    assert_eq!(p.makespans(), &[5, 3, 4, 2]);
    let curve = estimate_curve(&p, &[1, 2, 4]).unwrap();
    assert_eq!(curve, vec![(1, 3.5), (2, 2.5), (4, 2.0)]);
}

#[test]
fn size_errors() {
    let p = pool(&[5, 3, 4, 2]);
    assert!(matches!(
        windowed_min_mean(&p, 0),
        Err(EstimatorError::ZeroSize)
    ));
    assert!(matches!(
        windowed_min_mean(&p, 5),
        Err(EstimatorError::SizeTooLarge { .. })
    ));
    assert!(matches!(
        estimate_curve(&p, &[2, 1]),
        Err(EstimatorError::NotAscending)
    ));
    assert!(matches!(
        SamplePool::new(vec![]),
        Err(EstimatorError::EmptyPool)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Sizes dividing P tile the pool, so a window of k·s is a union of k
    /// windows of s and its minimum is at most their mean minimum.
    #[test]
    fn nested_sizes_monotone(v in prop::collection::vec(1i64..=1000, 1024)) {
        let p = pool(&v);
        let sizes: Vec<usize> = (0..=10).map(|e| 1 << e).collect();
        let curve = estimate_curve(&p, &sizes).unwrap();
        for (i, &(_, a)) in curve.iter().enumerate() {
            for &(_, b) in &curve[i + 1..] {
                prop_assert!(b <= a);
            }
        }
        prop_assert_eq!(curve[0].1, p.mean());
        prop_assert_eq!(curve[10].1, p.min() as f64);
    }

    #[test]
    fn remainder_is_ignored(v in prop::collection::vec(1i64..=50, 2..200), s in 1usize..10) {
        prop_assume!(s <= v.len());
        let whole = v.len() / s * s;
        let a = windowed_min_mean(&pool(&v), s).unwrap();
        let b = windowed_min_mean(&pool(&v[..whole]), s).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip(v in prop::collection::vec(1i64..=100_000, 1..50)) {
        let p = pool(&v);
        let back = SamplePool::from_csv_reader(p.to_csv().as_bytes()).unwrap();
        prop_assert_eq!(back.makespans(), p.makespans());
    }
}
