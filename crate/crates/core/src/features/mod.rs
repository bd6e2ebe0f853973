//! Per-session statistical features and the labeled datasets built from them.
//!
//! Thirteen features describe a session: five statistics over frame lengths,
//! three over packet directions and five over interarrival gaps. Capture
//! duration is deliberately not among them, since it only reflects how long
//! the observer kept recording.

mod selection;
pub mod stats;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::trace::TraceSession;

pub use self::selection::{
    estimate_histogram, fisher_score, kl_divergence, packet_level_divergence, rank_features,
    select_features, FeatureRank, FeatureRanking, Histogram, PacketSeries, DEFAULT_BINS,
    DEFAULT_SELECT_K, SMOOTHING,
};
pub use self::stats::count_peaks;

pub const FEATURE_NAMES: [&str; 13] = [
    "mean_frame",
    "std_frame",
    "min_frame",
    "max_frame",
    "peaks_frame",
    "mean_dir",
    "uplink_prop",
    "downlink_prop",
    "mean_ia",
    "std_ia",
    "min_ia",
    "max_ia",
    "peaks_ia",
];

/// Ordered feature names. Extraction, training and prediction all index
/// columns through the schema they were built with.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct FeatureSchema {
    names: Vec<String>,
}

impl FeatureSchema {
    pub fn full() -> Self {
        FeatureSchema {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("schema has no features".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate feature `{name}`"
                )));
            }
        }
        Ok(FeatureSchema { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub mean_frame: f64,
    pub std_frame: f64,
    pub min_frame: f64,
    pub max_frame: f64,
    pub peaks_frame: f64,
    pub mean_dir: f64,
    pub uplink_prop: f64,
    pub downlink_prop: f64,
    pub mean_ia: f64,
    pub std_ia: f64,
    pub min_ia: f64,
    pub max_ia: f64,
    pub peaks_ia: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; 13] {
        [
            self.mean_frame,
            self.std_frame,
            self.min_frame,
            self.max_frame,
            self.peaks_frame,
            self.mean_dir,
            self.uplink_prop,
            self.downlink_prop,
            self.mean_ia,
            self.std_ia,
            self.min_ia,
            self.max_ia,
            self.peaks_ia,
        ]
    }
}

/// Gaps between consecutive packet timestamps.
pub fn interarrival_series(session: &TraceSession) -> Result<Vec<f64>> {
    require_two_packets(session)?;
    Ok(session
        .packets()
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).max(0.0))
        .collect())
}

fn require_two_packets(session: &TraceSession) -> Result<()> {
    if session.len() < 2 {
        return Err(Error::MinPacketsNotMet {
            session_id: session.session_id.clone(),
            count: session.len(),
        });
    }
    Ok(())
}

pub fn extract_features(session: &TraceSession) -> Result<FeatureVector> {
    let gaps = interarrival_series(session)?;
    let frames: Vec<f64> = session
        .packets()
        .iter()
        .map(|p| f64::from(p.frame_length))
        .collect();
    let n = session.len() as f64;
    let uplinks = session
        .packets()
        .iter()
        .filter(|p| p.direction == crate::trace::Direction::Uplink)
        .count() as f64;
    let uplink_prop = uplinks / n;
    let downlink_prop = (n - uplinks) / n;

    Ok(FeatureVector {
        mean_frame: stats::mean(&frames),
        std_frame: stats::std_dev(&frames),
        min_frame: stats::min(&frames),
        max_frame: stats::max(&frames),
        peaks_frame: stats::count_peaks(&frames) as f64,
        // mean of the +1/-1 encodings
        mean_dir: (uplinks - (n - uplinks)) / n,
        uplink_prop,
        downlink_prop,
        mean_ia: stats::mean(&gaps),
        std_ia: stats::std_dev(&gaps),
        min_ia: stats::min(&gaps),
        max_ia: stats::max(&gaps),
        peaks_ia: stats::count_peaks(&gaps) as f64,
    })
}

/// Feature rows with their class labels and the ids of the sessions they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    schema: FeatureSchema,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Vec<f64>>,
        labels: Vec<Label>,
        ids: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                truth: labels.len(),
                predicted: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != schema.len()) {
            return Err(Error::ArityMismatch {
                expected: schema.len(),
                found: bad.len(),
            });
        }
        let ids = match ids {
            Some(ids) if ids.len() == rows.len() => ids,
            Some(ids) => {
                return Err(Error::LengthMismatch {
                    truth: ids.len(),
                    predicted: rows.len(),
                })
            }
            None => (0..rows.len()).map(|i| format!("row{i}")).collect(),
        };
        Ok(LabeledDataset {
            schema,
            rows,
            labels,
            ids,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    /// Row counts indexed by [`Label::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for label in &self.labels {
            counts[label.index()] += 1;
        }
        counts
    }

    pub fn has_both_classes(&self) -> bool {
        let [a, b] = self.class_counts();
        a > 0 && b > 0
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Reorders/selects columns by name to match `schema`.
    pub fn project(&self, schema: &FeatureSchema) -> Result<LabeledDataset> {
        let positions = schema
            .names()
            .iter()
            .map(|name| self.schema.position(name))
            .collect::<Option<Vec<usize>>>()
            .ok_or(Error::ArityMismatch {
                expected: schema.len(),
                found: schema
                    .names()
                    .iter()
                    .filter(|n| self.schema.position(n).is_some())
                    .count(),
            })?;
        Ok(self.project_indices(schema.clone(), &positions))
    }

    pub(crate) fn project_indices(
        &self,
        schema: FeatureSchema,
        positions: &[usize],
    ) -> LabeledDataset {
        LabeledDataset {
            schema,
            rows: self
                .rows
                .iter()
                .map(|r| positions.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        }
    }

    /// CSV with the schema names as header plus a trailing `label` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in self.schema.names() {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("label\n");
        for (row, label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{label}");
        }
        out
    }

    pub fn from_csv(text: &str, ids: Option<Vec<String>>) -> Result<LabeledDataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::RowParse {
                row: 0,
                reason: e.to_string(),
            })?
            .clone();
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        if names.last().map(String::as_str) != Some("label") || names.len() < 2 {
            return Err(Error::SchemaMismatch {
                expected: "<features...>,label".into(),
                found: names.join(","),
            });
        }
        let schema = FeatureSchema::new(names[..names.len() - 1].to_vec())?;

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| Error::RowParse {
                row: row_no,
                reason: e.to_string(),
            })?;
            if record.len() != schema.len() + 1 {
                return Err(Error::RowParse {
                    row: row_no,
                    reason: format!(
                        "expected {} fields, found {}",
                        schema.len() + 1,
                        record.len()
                    ),
                });
            }
            let values = record
                .iter()
                .take(schema.len())
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::RowParse {
                    row: row_no,
                    reason: e.to_string(),
                })?;
            let label =
                record[schema.len()]
                    .parse::<Label>()
                    .map_err(|reason| Error::RowParse {
                        row: row_no,
                        reason,
                    })?;
            rows.push(values);
            labels.push(label);
        }
        LabeledDataset::new(schema, rows, labels, ids)
    }
}

/// One full-schema row per labeled session, in input order.
pub fn build_dataset(sessions: &[TraceSession]) -> Result<LabeledDataset> {
    if sessions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rows = Vec::with_capacity(sessions.len());
    let mut labels = Vec::with_capacity(sessions.len());
    let mut ids = Vec::with_capacity(sessions.len());
    for session in sessions {
        let label = session
            .label
            .ok_or_else(|| Error::UnlabeledSession(session.session_id.clone()))?;
        rows.push(extract_features(session)?.to_array().to_vec());
        labels.push(label);
        ids.push(session.session_id.clone());
    }
    LabeledDataset::new(FeatureSchema::full(), rows, labels, Some(ids))
}
