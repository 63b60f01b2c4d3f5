use mag_core::scoring::{anomaly_score, combined_score, compute_auc};
use proptest::prelude::*;

/// Twice the Mann–Whitney count, by direct comparison of every pair.
fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice = 0u64;
    let (mut p, mut q) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            q += 1;
        }
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                twice += 2;
            } else if scores[i] == scores[j] {
                twice += 1;
            }
        }
    }
    twice as f64 / (2.0 * p as f64 * q as f64)
}

fn labelled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..=200).prop_flat_map(|n| {
        (
            proptest::collection::vec(-6i32..6, n),
            proptest::collection::vec(any::<bool>(), n),
            0..n,
            0..n,
        )
            .prop_map(|(raw, mut labels, a, b)| {
                // guarantee both classes
                let b = if a == b { (b + 1) % labels.len() } else { b };
                labels[a] = true;
                labels[b] = false;
                (
                    raw.into_iter().map(|v| f64::from(v) * 0.25).collect(),
                    labels,
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auc_matches_pairwise_oracle((scores, labels) in labelled_scores()) {
        prop_assert_eq!(compute_auc(&scores, &labels).unwrap(), pairwise_auc(&scores, &labels));
    }

    #[test]
    fn auc_ignores_monotone_transforms((scores, labels) in labelled_scores()) {
        let base = compute_auc(&scores, &labels).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| 2.0 * s + 3.0).collect();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(compute_auc(&affine, &labels).unwrap(), base);
        prop_assert_eq!(compute_auc(&exp, &labels).unwrap(), base);
    }

    #[test]
    fn round_statistics_are_bounded_and_exchangeable(
        rounds in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..64),
        rotate in any::<usize>(),
    ) {
        let (pos, neg): (Vec<f64>, Vec<f64>) = rounds.iter().copied().unzip();
        let s = anomaly_score(&pos, &neg).unwrap();
        prop_assert!((-2.0..=2.0).contains(&s.score));
        prop_assert!(s.std >= 0.0);

        let mut shuffled = rounds.clone();
        shuffled.rotate_left(rotate % rounds.len());
        shuffled.reverse();
        let (p2, n2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
        prop_assert_eq!(anomaly_score(&p2, &n2).unwrap(), s);
    }
}

#[test]
fn hand_cases() {
    assert_eq!(anomaly_score(&[1.0; 5], &[0.0; 5]).unwrap().score, -1.0);
    assert_eq!(anomaly_score(&[0.5; 5], &[0.5; 5]).unwrap().score, 0.0);
    let s = anomaly_score(&[0.3, 0.3], &[0.3, 1.3]).unwrap();
    assert_eq!((s.mean, s.std, s.score), (0.5, 0.5, 1.0));
    assert_eq!(
        combined_score(&[vec![0.0], vec![1.0]], &[0.3, 0.7]).unwrap(),
        vec![0.7]
    );
}

#[test]
fn auc_edge_cases() {
    assert_eq!(
        compute_auc(&[0.1, 0.2, 0.9], &[false, false, true]).unwrap(),
        1.0
    );
    assert_eq!(
        compute_auc(&[1.0; 4], &[true, false, true, false]).unwrap(),
        0.5
    );
    assert!(compute_auc(&[0.1, 0.2], &[true, true]).is_err());
    assert!(compute_auc(&[f64::NAN, 0.2], &[true, false]).is_err());
}
