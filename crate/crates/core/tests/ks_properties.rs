mod common;

use fleet_anomaly::anomaly::{ks_sorted, ks_statistic};
use fleet_anomaly::geo::DistanceSample;
use proptest::prelude::*;

fn sample(v: Vec<f64>) -> DistanceSample {
    DistanceSample {
        time_index: 0,
        distances: v,
    }
}

// Values on a coarse lattice so ties are common.
fn values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..40).prop_map(|k| k as f64 * 12.5), 1..max_len)
}

proptest! {
    #[test]
    fn matches_brute_force_exactly(a in values(60), b in values(60)) {
        let got = ks_statistic(&sample(a.clone()), &sample(b.clone())).unwrap();
        prop_assert_eq!(got.to_bits(), common::ks_brute_force(&a, &b).to_bits());
    }

    #[test]
    fn continuous_values_match_brute_force(
        a in prop::collection::vec(0.0f64..1600.0, 1..80),
        b in prop::collection::vec(0.0f64..1600.0, 1..80),
    ) {
        let got = ks_statistic(&sample(a.clone()), &sample(b.clone())).unwrap();
        prop_assert_eq!(got.to_bits(), common::ks_brute_force(&a, &b).to_bits());
    }

    #[test]
    fn symmetric_and_bounded(a in values(50), b in values(50)) {
        let ab = ks_statistic(&sample(a.clone()), &sample(b.clone())).unwrap();
        let ba = ks_statistic(&sample(b), &sample(a)).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn identical_samples_give_zero(a in values(50)) {
        prop_assert_eq!(ks_statistic(&sample(a.clone()), &sample(a)).unwrap(), 0.0);
    }

    #[test]
    fn separated_samples_give_one(a in values(30), b in values(30)) {
        let shifted: Vec<f64> = b.iter().map(|v| v + 1000.0).collect();
        prop_assert_eq!(ks_statistic(&sample(a), &sample(shifted)).unwrap(), 1.0);
    }

    #[test]
    fn f32_agrees_with_f64(a in values(40), b in values(40)) {
        let mut a32: Vec<f32> = a.iter().map(|&v| v as f32).collect();
        let mut b32: Vec<f32> = b.iter().map(|&v| v as f32).collect();
        a32.sort_by(f32::total_cmp);
        b32.sort_by(f32::total_cmp);
        let d32 = ks_sorted(&a32, &b32) as f64;
        let d64 = common::ks_brute_force(&a, &b);
        prop_assert!((d32 - d64).abs() < 1e-6);
    }
}

#[test]
fn empty_sample_is_an_error() {
    assert!(ks_statistic(&sample(vec![]), &sample(vec![1.0])).is_err());
}
