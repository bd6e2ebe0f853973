use approx::assert_relative_eq;
use flprint_core::features::{
    estimate_histogram, extract_features, fisher_score, kl_divergence, rank_features,
    FeatureSchema, LabeledDataset,
};
use flprint_core::synth::{cnn_profile, generate_session, rnn_profile};
use flprint_core::{Condition, Direction, Label, PacketRecord, TraceSession};
use proptest::prelude::*;

/// Timestamps on a 2^-10 s grid so shifts and power-of-two scalings are exact.
fn dyadic_session() -> impl Strategy<Value = TraceSession> {
    prop::collection::vec((0u64..4096, 1u32..1515, any::<bool>()), 2..60).prop_map(|rows| {
        let mut tick = 0u64;
        let packets = rows
            .into_iter()
            .map(|(gap, len, up)| {
                tick += gap;
                PacketRecord {
                    timestamp: tick as f64 / 1024.0,
                    frame_length: len,
                    direction: if up {
                        Direction::Uplink
                    } else {
                        Direction::Downlink
                    },
                }
            })
            .collect();
        TraceSession::new("s", packets, None, Condition::Ideal)
    })
}

fn transform(s: &TraceSession, f: impl Fn(f64) -> f64) -> TraceSession {
    let packets = s
        .packets()
        .iter()
        .map(|p| PacketRecord {
            timestamp: f(p.timestamp),
            ..*p
        })
        .collect();
    TraceSession::new("t", packets, None, Condition::Ideal)
}

proptest! {
    #[test]
    fn feature_vector_invariants(s in dyadic_session()) {
        let f = extract_features(&s).unwrap();
        prop_assert!(f.min_frame <= f.mean_frame && f.mean_frame <= f.max_frame);
        prop_assert!(f.min_ia <= f.mean_ia && f.mean_ia <= f.max_ia);
        prop_assert!(f.std_frame >= 0.0 && f.std_ia >= 0.0);
        prop_assert!((f.uplink_prop + f.downlink_prop - 1.0).abs() <= 1e-12);
        prop_assert!((f.mean_dir - (2.0 * f.uplink_prop - 1.0)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&f.uplink_prop));
        prop_assert!(f.peaks_frame >= 0.0 && f.peaks_frame.fract() == 0.0);
        prop_assert!(f.peaks_ia >= 0.0 && f.peaks_ia.fract() == 0.0);
    }

    #[test]
    fn time_shift_leaves_features_unchanged(s in dyadic_session(), shift in 0u64..1_000_000) {
        let shifted = transform(&s, |t| t + shift as f64 / 1024.0);
        prop_assert_eq!(extract_features(&s).unwrap(), extract_features(&shifted).unwrap());
    }

    #[test]
    fn power_of_two_time_scaling(s in dyadic_session(), k in -6i32..7) {
        let c = 2f64.powi(k);
        let a = extract_features(&s).unwrap();
        let b = extract_features(&transform(&s, |t| t * c)).unwrap();
        prop_assert_eq!(b.mean_ia, c * a.mean_ia);
        prop_assert_eq!(b.std_ia, c * a.std_ia);
        prop_assert_eq!(b.min_ia, c * a.min_ia);
        prop_assert_eq!(b.max_ia, c * a.max_ia);
        prop_assert_eq!(b.peaks_ia, a.peaks_ia);
        prop_assert_eq!(
            &b.to_array()[..8],
            &a.to_array()[..8]
        );
    }

    #[test]
    fn general_time_scaling(s in dyadic_session(), c in 0.01f64..100.0) {
        let a = extract_features(&s).unwrap();
        let b = extract_features(&transform(&s, |t| t * c)).unwrap();
        assert_relative_eq!(b.mean_ia, c * a.mean_ia, max_relative = 1e-9, epsilon = 1e-12);
        assert_relative_eq!(b.max_ia, c * a.max_ia, max_relative = 1e-9, epsilon = 1e-12);
        prop_assert_eq!(&b.to_array()[..8], &a.to_array()[..8]);
    }
}

/// Bins raw values over [-50, 50] and applies pseudo-count smoothing.
fn independent_mass(values: &[f64], bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    for &v in values {
        let mut b = 0;
        while b + 1 < bins && v >= -50.0 + 100.0 * (b + 1) as f64 / bins as f64 {
            b += 1;
        }
        counts[b] += 1.0;
    }
    let total = values.len() as f64 + bins as f64 * 1e-9;
    counts.iter().map(|c| (c + 1e-9) / total).collect()
}

fn independent_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0)
}

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_on_self(
        a in prop::collection::vec(-50.0f64..50.0, 1..40),
        b in prop::collection::vec(-50.0f64..50.0, 1..40),
        bins in 1usize..30,
    ) {
        let p = estimate_histogram(&a, bins, -50.0, 50.0).unwrap();
        let q = estimate_histogram(&b, bins, -50.0, 50.0).unwrap();
        let total: f64 = p.mass().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(p.edges().windows(2).all(|w| w[1] > w[0]));
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let (pm, qm) = (independent_mass(&a, bins), independent_mass(&b, bins));
        for (x, y) in p.mass().iter().zip(&pm) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
        assert_relative_eq!(d, independent_kl(&pm, &qm), max_relative = 1e-9, epsilon = 1e-12);
    }
}

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> LabeledDataset {
    let names = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
    LabeledDataset::new(FeatureSchema::new(names).unwrap(), rows, labels, None).unwrap()
}

fn two_class() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Label>)> {
    (1usize..5, 2usize..12).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(-4i32..5, d), n).prop_map(|r| {
                r.into_iter()
                    .map(|v| v.into_iter().map(f64::from).collect())
                    .collect()
            }),
            prop::collection::vec(any::<bool>(), n - 2),
        )
            .prop_map(|(rows, flags): (Vec<Vec<f64>>, Vec<bool>)| {
                let mut labels = vec![Label::Cnn, Label::Rnn];
                labels.extend(
                    flags
                        .into_iter()
                        .map(|f| if f { Label::Cnn } else { Label::Rnn }),
                );
                (rows, labels)
            })
    })
}

fn brute_fisher(rows: &[Vec<f64>], labels: &[Label], j: usize) -> f64 {
    let stats = |l: Label| {
        let xs: Vec<f64> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == l)
            .map(|(r, _)| r[j])
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        (m, v)
    };
    let ((ma, va), (mb, vb)) = (stats(Label::Cnn), stats(Label::Rnn));
    let num = (ma - mb) * (ma - mb);
    if va + vb == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / (va + vb)
    }
}

proptest! {
    #[test]
    fn fisher_symmetric_under_label_swap((rows, labels) in two_class()) {
        let swapped: Vec<Label> = labels.iter().map(|l| l.other()).collect();
        let a = dataset(rows.clone(), labels);
        let b = dataset(rows, swapped);
        for j in 0..a.arity() {
            prop_assert_eq!(fisher_score(&a, j).unwrap(), fisher_score(&b, j).unwrap());
        }
    }

    #[test]
    fn ranking_matches_brute_force((rows, labels) in two_class()) {
        let ds = dataset(rows.clone(), labels.clone());
        let ranking = rank_features(&ds, 10).unwrap();
        let mut expected: Vec<(usize, f64)> =
            (0..ds.arity()).map(|j| (j, brute_fisher(&rows, &labels, j))).collect();
        // descending score, ascending index on ties
        expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got: Vec<usize> = ranking.records.iter().map(|r| r.index).collect();
        let want: Vec<usize> = expected.iter().map(|e| e.0).collect();
        prop_assert_eq!(got, want);
        for (r, (_, s)) in ranking.records.iter().zip(&expected) {
            if s.is_finite() {
                assert_relative_eq!(r.fisher, *s, max_relative = 1e-9, epsilon = 1e-12);
            } else {
                prop_assert!(r.fisher.is_infinite());
            }
        }
    }
}

#[test]
fn fisher_on_separated_triples() {
    let ds = dataset(
        [1.0, 2.0, 3.0, 7.0, 8.0, 9.0]
            .iter()
            .map(|&v| vec![v])
            .collect(),
        [
            Label::Cnn,
            Label::Cnn,
            Label::Cnn,
            Label::Rnn,
            Label::Rnn,
            Label::Rnn,
        ]
        .to_vec(),
    );
    assert_relative_eq!(fisher_score(&ds, 0).unwrap(), 27.0, epsilon = 1e-9);
}

#[test]
fn interarrival_mean_diverges_more_than_frame_mean() {
    let sessions: Vec<TraceSession> = (0..40)
        .flat_map(|i| {
            [
                generate_session(&cnn_profile(), 10_000 + i).unwrap(),
                generate_session(&rnn_profile(), 20_000 + i).unwrap(),
            ]
        })
        .collect();
    let ds = flprint_core::features::build_dataset(&sessions).unwrap();
    let ranking = rank_features(&ds, 20).unwrap();
    let rec = |n: &str| &ranking.records[ranking.position(n).unwrap()];
    assert!(rec("mean_ia").kl_ab > rec("mean_frame").kl_ab);
    assert!(rec("mean_ia").kl_ba > rec("mean_frame").kl_ba);
}
