use std::collections::BTreeMap;

use flprint_core::synth::{
    browsing_noise, cnn_profile, generate_corpus, generate_session, inject_noise, read_manifest,
    rnn_profile, write_pcap, CorpusSpec, Distribution, NoiseProfile, Role, SplitCounts,
};
use flprint_core::trace::{parse_pcap, read_csv, write_csv};
use flprint_core::{CaptureConfig, Condition, Direction, Label, TraceSession};
use proptest::prelude::*;

fn config() -> CaptureConfig {
    CaptureConfig::new(CorpusSpec::DEFAULT_SERVER)
}

fn records(s: &TraceSession) -> Vec<(f64, u32, Direction)> {
    s.packets()
        .iter()
        .map(|p| (p.timestamp, p.frame_length, p.direction))
        .collect()
}

/// 100 sessions mixing both profiles and both conditions.
fn random_sessions() -> Vec<TraceSession> {
    (0..100u64)
        .map(|i| {
            let mut p = if i % 2 == 0 {
                cnn_profile()
            } else {
                rnn_profile()
            };
            p.rounds = 1 + (i % 3) as u32;
            p.downlink_bytes = 20_000 + 997 * i;
            p.uplink_bytes = 15_000 + 331 * i;
            let s = generate_session(&p, 900 + i).unwrap();
            if i % 3 == 0 {
                inject_noise(
                    &s,
                    &NoiseProfile {
                        rate: 50.0,
                        ..browsing_noise()
                    },
                    i,
                )
                .unwrap()
            } else {
                s
            }
        })
        .collect()
}

#[test]
fn pcap_round_trip_is_exact() {
    for s in random_sessions() {
        let raw = write_pcap(&s, CorpusSpec::DEFAULT_SERVER, CorpusSpec::DEFAULT_CLIENT).unwrap();
        let back = parse_pcap(&raw, &config()).unwrap();
        assert_eq!(back.len(), s.len(), "no packet may be skipped");
        for (a, b) in records(&s).iter().zip(records(&back)) {
            assert!((a.0 - b.0).abs() <= 1e-6);
            assert_eq!((a.1, a.2), (b.1, b.2));
        }
        // generated timestamps sit on the microsecond grid
        assert_eq!(records(&s), records(&back));
    }
}

#[test]
fn csv_round_trip_is_exact() {
    for s in random_sessions() {
        let text = write_csv(&s).unwrap();
        let back = read_csv(&text).unwrap();
        assert_eq!(records(&s), records(&back));
    }
}

proptest! {
    #[test]
    fn csv_round_trip_arbitrary_times(
        rows in prop::collection::vec((0.0f64..1e6, 1u32..100_000, any::<bool>()), 1..50)
    ) {
        let packets = rows
            .into_iter()
            .map(|(t, len, up)| flprint_core::PacketRecord {
                timestamp: t,
                frame_length: len,
                direction: if up { Direction::Uplink } else { Direction::Downlink },
            })
            .collect();
        let s = TraceSession::new("p", packets, None, Condition::Ideal);
        prop_assert_eq!(records(&read_csv(&write_csv(&s).unwrap()).unwrap()), records(&s));
    }
}

#[test]
fn ideal_sessions_alternate_bursts_per_round() {
    for (profile, seed) in [(cnn_profile(), 1), (rnn_profile(), 2)] {
        let s = generate_session(&profile, seed).unwrap();
        let mut runs: Vec<Direction> = Vec::new();
        for p in s.packets() {
            if runs.last() != Some(&p.direction) {
                runs.push(p.direction);
            }
        }
        let expected: Vec<Direction> = (0..profile.rounds)
            .flat_map(|_| [Direction::Downlink, Direction::Uplink])
            .collect();
        assert_eq!(runs, expected);
        // every downlink-to-uplink switch carries a compute gap of at least 2 s
        let switches = s
            .packets()
            .windows(2)
            .filter(|w| {
                w[0].direction == Direction::Downlink && w[1].direction == Direction::Uplink
            })
            .filter(|w| w[1].timestamp - w[0].timestamp >= 2.0)
            .count();
        assert_eq!(switches, profile.rounds as usize);
    }
}

#[test]
fn noise_count_within_four_sigma() {
    // 20% of the final packets expected to be noise: rate * span = 0.25 * n
    let base = generate_session(&rnn_profile(), 77).unwrap();
    let n = base.len() as f64;
    let span = base.packets().last().unwrap().timestamp - base.packets()[0].timestamp;
    let rate = 0.25 * n / span;
    let expected = rate * span;
    let sigma = expected.sqrt();
    let noise = NoiseProfile {
        rate,
        ..browsing_noise()
    };
    let mut total = 0.0;
    for seed in 0..100 {
        let noisy = inject_noise(&base, &noise, seed).unwrap();
        let added = (noisy.len() - base.len()) as f64;
        assert!(
            (added - expected).abs() <= 4.0 * sigma,
            "seed {seed}: {added} vs {expected}"
        );
        total += added;
    }
    // the mean of 100 draws has sigma / 10 spread
    assert!((total / 100.0 - expected).abs() <= 4.0 * sigma / 10.0);
}

#[test]
fn separation_orderings() {
    let (mut std_wins, mut frame_wins) = (0, 0);
    for i in 0..100 {
        let a = flprint_core::features::extract_features(
            &generate_session(&cnn_profile(), 50_000 + i).unwrap(),
        )
        .unwrap();
        let b = flprint_core::features::extract_features(
            &generate_session(&rnn_profile(), 60_000 + i).unwrap(),
        )
        .unwrap();
        std_wins += (a.std_ia > b.std_ia) as u32;
        frame_wins += (a.mean_frame > b.mean_frame) as u32;
    }
    assert!(std_wins >= 95, "std_ia ordering held in {std_wins}/100");
    assert!(
        frame_wins >= 80,
        "mean_frame ordering held in {frame_wins}/100"
    );
}

#[test]
fn degenerate_distribution_reported() {
    let mut p = cnn_profile();
    p.compute_gap = Distribution::TruncatedNormal {
        mean: 0.0,
        std: 0.01,
        lo: 10.0,
        hi: 11.0,
    };
    assert!(matches!(
        generate_session(&p, 0),
        Err(flprint_core::Error::DegenerateProfile(_))
    ));
}

fn snapshot(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for role in ["train", "test"] {
        for entry in std::fs::read_dir(dir.join(role)).unwrap() {
            let entry = entry.unwrap();
            out.insert(
                format!("{role}/{}", entry.file_name().to_string_lossy()),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out.insert(
        "manifest.csv".into(),
        std::fs::read(dir.join("manifest.csv")).unwrap(),
    );
    out
}

#[test]
fn default_corpus_shape_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = CorpusSpec::new(3);
    let noise = browsing_noise();
    let m = generate_corpus(&spec, a.path(), &cnn_profile(), &rnn_profile(), &noise).unwrap();
    generate_corpus(&spec, b.path(), &cnn_profile(), &rnn_profile(), &noise).unwrap();

    let files = snapshot(a.path());
    assert_eq!(files.len(), 40);
    assert_eq!(
        files,
        snapshot(b.path()),
        "same seed must give byte-identical files"
    );

    let manifest = read_manifest(std::str::from_utf8(&files["manifest.csv"]).unwrap()).unwrap();
    assert_eq!(manifest, m);
    let count = |role, label| {
        m.iter()
            .filter(|e| e.role == role && e.label == label)
            .count()
    };
    assert_eq!(
        (
            count(Role::Train, Label::Cnn),
            count(Role::Train, Label::Rnn)
        ),
        (8, 8)
    );
    assert_eq!(
        (count(Role::Test, Label::Cnn), count(Role::Test, Label::Rnn)),
        (12, 11)
    );
    for role in [Role::Train, Role::Test] {
        for cond in [Condition::Ideal, Condition::Noisy] {
            assert!(m.iter().any(|e| e.role == role && e.condition == cond));
        }
    }

    // every capture parses completely, and noisy ones carry extra packets
    for e in &m {
        let raw = &files[&e.path];
        let s = parse_pcap(raw, &config()).unwrap();
        let clean = generate_session(&cnn_or_rnn(e.label), e.seed).unwrap();
        match e.condition {
            Condition::Ideal => assert_eq!(records(&s), records(&clean)),
            Condition::Noisy => assert!(s.len() >= clean.len()),
        }
    }

    let c = tempfile::tempdir().unwrap();
    generate_corpus(
        &CorpusSpec::new(4),
        c.path(),
        &cnn_profile(),
        &rnn_profile(),
        &noise,
    )
    .unwrap();
    assert_ne!(snapshot(c.path()), files);
}

fn cnn_or_rnn(label: Label) -> flprint_core::synth::WorkloadProfile {
    match label {
        Label::Cnn => cnn_profile(),
        Label::Rnn => rnn_profile(),
    }
}

#[test]
fn corpus_without_noisy_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = CorpusSpec::new(1);
    for cell in [
        &mut spec.train_cnn,
        &mut spec.train_rnn,
        &mut spec.test_cnn,
        &mut spec.test_rnn,
    ] {
        *cell = SplitCounts::new(cell.total(), 0);
    }
    let m = generate_corpus(
        &spec,
        dir.path(),
        &cnn_profile(),
        &rnn_profile(),
        &browsing_noise(),
    )
    .unwrap();
    assert_eq!(m.len(), 39);
    assert!(m.iter().all(|e| e.condition == Condition::Ideal));
}

#[test]
fn unwritable_output_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let err = generate_corpus(
        &CorpusSpec::new(0),
        &blocker,
        &cnn_profile(),
        &rnn_profile(),
        &browsing_noise(),
    )
    .unwrap_err();
    match err {
        flprint_core::Error::Io { path, .. } => assert!(path.starts_with(&blocker)),
        other => panic!("expected Io, got {other:?}"),
    }
}
