//! Fixed inputs shared by the benchmarks.

use flprint_core::features::build_dataset;
use flprint_core::synth::{
    browsing_noise, cnn_profile, generate_session, inject_noise, rnn_profile, write_pcap,
    CorpusSpec,
};
use flprint_core::{LabeledDataset, TraceSession};

/// One default-profile session per class, the CNN one with noise.
pub fn sessions() -> [TraceSession; 2] {
    let cnn = generate_session(&cnn_profile(), 1).expect("default profile is valid");
    let rnn = generate_session(&rnn_profile(), 2).expect("default profile is valid");
    [
        inject_noise(&cnn, &browsing_noise(), 1).expect("default noise is valid"),
        rnn,
    ]
}

pub fn capture(session: &TraceSession) -> Vec<u8> {
    write_pcap(
        session,
        CorpusSpec::DEFAULT_SERVER,
        CorpusSpec::DEFAULT_CLIENT,
    )
    .expect("synthetic frames carry full headers")
}

/// `per_class` sessions of each label, alternating clean and noisy.
pub fn training_set(per_class: u64) -> LabeledDataset {
    let mut out = Vec::new();
    for i in 0..per_class {
        for (profile, offset) in [(cnn_profile(), 0), (rnn_profile(), 1)] {
            let s = generate_session(&profile, 2 * i + offset).expect("default profile is valid");
            out.push(if i % 2 == 1 {
                inject_noise(&s, &browsing_noise(), i).expect("default noise is valid")
            } else {
                s
            });
        }
    }
    build_dataset(&out).expect("sessions are labeled")
}
