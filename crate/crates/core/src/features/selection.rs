//! Feature ranking: Fisher scores and histogram KL divergences between the
//! two classes, and projection onto the top-ranked features.

use std::fmt::Write as _;

use serde::Serialize;

use super::{interarrival_series, stats, FeatureSchema, LabeledDataset};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::trace::TraceSession;

/// Additive smoothing applied to every histogram bin.
pub const SMOOTHING: f64 = 1e-9;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_SELECT_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    edges: Vec<f64>,
    mass: Vec<f64>,
}

impl Histogram {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }
}

/// Equal-width histogram over `[lo, hi]`. Out-of-range values land in the
/// end bins; every bin gets `SMOOTHING` pseudo-counts so no mass is zero.
pub fn estimate_histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadRange { lo, hi });
    }
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    let width = hi - lo;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| {
            if i == bins {
                hi
            } else {
                lo + width * i as f64 / bins as f64
            }
        })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let pos = ((v - lo) / width * bins as f64).floor();
        let idx = if pos.is_nan() || pos < 0.0 {
            0
        } else {
            (pos as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    let denom = values.len() as f64 + bins as f64 * SMOOTHING;
    let mass = counts
        .iter()
        .map(|&c| (c as f64 + SMOOTHING) / denom)
        .collect();
    Ok(Histogram { edges, mass })
}

/// `KL(p || q)` in nats.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.edges != q.edges {
        return Err(Error::EdgeMismatch);
    }
    let kl: f64 = p
        .mass
        .iter()
        .zip(&q.mass)
        .filter(|(&pb, _)| pb > 0.0)
        .map(|(&pb, &qb)| pb * (pb / qb).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Two-class Fisher score `(mu_cnn - mu_rnn)^2 / (var_cnn + var_rnn)` with
/// population variances. Zero within-class variance gives `+inf` when the
/// means differ and `0` otherwise.
pub fn fisher_score(dataset: &LabeledDataset, feature_index: usize) -> Result<f64> {
    if feature_index >= dataset.arity() {
        return Err(Error::IndexOutOfRange {
            index: feature_index,
            arity: dataset.arity(),
        });
    }
    if !dataset.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    let (a, b) = split_by_class(dataset, feature_index);
    let gap = stats::mean(&a) - stats::mean(&b);
    let spread = stats::variance(&a) + stats::variance(&b);
    if spread == 0.0 {
        return Ok(if gap != 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(gap * gap / spread)
}

fn split_by_class(dataset: &LabeledDataset, feature_index: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cnn = Vec::new();
    let mut rnn = Vec::new();
    for (row, label) in dataset.rows().iter().zip(dataset.labels()) {
        match label {
            Label::Cnn => cnn.push(row[feature_index]),
            Label::Rnn => rnn.push(row[feature_index]),
        }
    }
    (cnn, rnn)
}

fn pooled_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRank {
    pub name: String,
    /// Column index in the ranked dataset's schema.
    pub index: usize,
    pub fisher: f64,
    /// KL(CNN || RNN)
    pub kl_ab: f64,
    /// KL(RNN || CNN)
    pub kl_ba: f64,
    pub hist_cnn: Histogram,
    pub hist_rnn: Histogram,
}

/// Features sorted by Fisher score, descending; ties keep schema order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRanking {
    pub records: Vec<FeatureRank>,
}

impl FeatureRanking {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.records.iter().position(|r| r.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.records.iter().map(|r| r.name.clone()).collect()
    }

    /// `name,fisher,kl_ab,kl_ba`, one line per feature in rank order.
    pub fn to_report(&self) -> String {
        let mut out = String::from("name,fisher,kl_ab,kl_ba\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.name, r.fisher, r.kl_ab, r.kl_ba);
        }
        out
    }

    /// Long-format dump of every class histogram, for external plotting.
    pub fn histogram_dump(&self) -> String {
        let mut out = String::from("name,class,bin,lo,hi,mass\n");
        for r in &self.records {
            for (label, h) in [(Label::Cnn, &r.hist_cnn), (Label::Rnn, &r.hist_rnn)] {
                for (b, m) in h.mass.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.name,
                        label,
                        b,
                        h.edges[b],
                        h.edges[b + 1],
                        m
                    );
                }
            }
        }
        out
    }
}

pub fn rank_features(dataset: &LabeledDataset, bins: usize) -> Result<FeatureRanking> {
    if !dataset.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    let mut records = Vec::with_capacity(dataset.arity());
    for (index, name) in dataset.schema().names().iter().enumerate() {
        let fisher = fisher_score(dataset, index)?;
        let (cnn, rnn) = split_by_class(dataset, index);
        let (lo, hi) = pooled_range(cnn.iter().chain(&rnn).copied());
        let hist_cnn = estimate_histogram(&cnn, bins, lo, hi)?;
        let hist_rnn = estimate_histogram(&rnn, bins, lo, hi)?;
        records.push(FeatureRank {
            name: name.clone(),
            index,
            fisher,
            kl_ab: kl_divergence(&hist_cnn, &hist_rnn)?,
            kl_ba: kl_divergence(&hist_rnn, &hist_cnn)?,
            hist_cnn,
            hist_rnn,
        });
    }
    // stable: equal scores keep schema order
    records.sort_by(|a, b| b.fisher.total_cmp(&a.fisher));
    Ok(FeatureRanking { records })
}

/// Projects `dataset` onto its `k` best features, in rank order.
pub fn select_features(dataset: &LabeledDataset, k: usize, bins: usize) -> Result<LabeledDataset> {
    if k == 0 || k > dataset.arity() {
        return Err(Error::IndexOutOfRange {
            index: k,
            arity: dataset.arity(),
        });
    }
    let ranking = rank_features(dataset, bins)?;
    let kept = &ranking.records[..k];
    let schema = FeatureSchema::new(kept.iter().map(|r| r.name.clone()).collect())?;
    let positions: Vec<usize> = kept.iter().map(|r| r.index).collect();
    Ok(dataset.project_indices(schema, &positions))
}

/// Raw per-packet series whose class distributions can be compared directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketSeries {
    FrameLength,
    Interarrival,
}

/// KL divergences `(CNN||RNN, RNN||CNN)` between per-packet values pooled
/// over all sessions of each class.
pub fn packet_level_divergence(
    sessions: &[TraceSession],
    series: PacketSeries,
    bins: usize,
) -> Result<(f64, f64)> {
    let mut pooled: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for session in sessions {
        let label = session
            .label
            .ok_or_else(|| Error::UnlabeledSession(session.session_id.clone()))?;
        let values = match series {
            PacketSeries::FrameLength => session
                .packets()
                .iter()
                .map(|p| f64::from(p.frame_length))
                .collect(),
            PacketSeries::Interarrival => interarrival_series(session)?,
        };
        pooled[label.index()].extend(values);
    }
    let [cnn, rnn] = pooled;
    if cnn.is_empty() || rnn.is_empty() {
        return Err(Error::SingleClassDataset);
    }
    let (lo, hi) = pooled_range(cnn.iter().chain(&rnn).copied());
    let h_cnn = estimate_histogram(&cnn, bins, lo, hi)?;
    let h_rnn = estimate_histogram(&rnn, bins, lo, hi)?;
    Ok((
        kl_divergence(&h_cnn, &h_rnn)?,
        kl_divergence(&h_rnn, &h_cnn)?,
    ))
}
