//! Fingerprinting the model architecture a federated-learning client trains
//! from nothing but layer-3 packet metadata: frame sizes, directions and
//! interarrival times.
//!
//! The pipeline runs capture ingestion ([`trace`]), per-session statistics and
//! feature ranking ([`features`]), three classifiers ([`classifiers`]) and
//! Table-style evaluation ([`eval`]). [`synth`] generates labeled FL traffic
//! corpora to drive it end to end.

pub mod classifiers;
pub mod error;
pub mod eval;
pub mod features;
pub mod label;
pub mod rng;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use features::{FeatureSchema, FeatureVector, LabeledDataset};
pub use label::{Condition, Label};
pub use trace::{CaptureConfig, Direction, Endpoint, PacketRecord, TraceSession};
