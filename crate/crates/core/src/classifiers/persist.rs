//! Model files: a JSON envelope
//!
//! ```text
//! { "format_version": 1, "classifier_kind": "forest", "schema": [...],
//!   "params": {...}, "seed": 42, "payload": {...}, "checksum": "<sha256 hex>" }
//! ```
//!
//! `checksum` is the SHA-256 of the compact JSON array
//! `[classifier_kind, schema, params, seed, payload]`. Files with a newer
//! `format_version` are rejected.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ClassifierKind, ClassifierParams, Model};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format_version: u32,
    classifier_kind: ClassifierKind,
    schema: FeatureSchema,
    params: ClassifierParams,
    seed: u64,
    payload: Value,
    checksum: String,
}

fn checksum(
    kind: ClassifierKind,
    schema: &FeatureSchema,
    params: &ClassifierParams,
    seed: u64,
    payload: &Value,
) -> Result<String> {
    let canonical = serde_json::to_string(&(kind, schema, params, seed, payload))
        .map_err(|e| Error::CorruptModel(e.to_string()))?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn save_model(model: &Model) -> Result<Vec<u8>> {
    let payload = serde_json::to_value(model).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let kind = model.kind();
    let schema = model.schema().clone();
    let params = model.params();
    let seed = model.seed();
    let checksum = checksum(kind, &schema, &params, seed, &payload)?;
    let envelope = Envelope {
        format_version: MODEL_FORMAT_VERSION,
        classifier_kind: kind,
        schema,
        params,
        seed,
        payload,
        checksum,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&envelope).map_err(|e| Error::CorruptModel(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn load_model(bytes: &[u8]) -> Result<Model> {
    let envelope: Envelope =
        serde_json::from_slice(bytes).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if envelope.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::CorruptModel(format!(
            "unsupported format_version {} (this build reads {MODEL_FORMAT_VERSION})",
            envelope.format_version
        )));
    }
    let expected = checksum(
        envelope.classifier_kind,
        &envelope.schema,
        &envelope.params,
        envelope.seed,
        &envelope.payload,
    )?;
    if expected != envelope.checksum {
        return Err(Error::CorruptModel("checksum mismatch".into()));
    }
    let model: Model =
        serde_json::from_value(envelope.payload).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if model.kind() != envelope.classifier_kind
        || model.schema() != &envelope.schema
        || model.params() != envelope.params
        || model.seed() != envelope.seed
    {
        return Err(Error::CorruptModel(
            "envelope disagrees with payload".into(),
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::{train, ForestParams};
    use super::*;
    use crate::features::LabeledDataset;
    use crate::label::Label;

    fn model() -> Model {
        let data = LabeledDataset::new(
            FeatureSchema::new(vec!["a".into(), "b".into()]).unwrap(),
            vec![
                vec![0.0, 1.0],
                vec![1.0, 0.5],
                vec![2.0, 0.1],
                vec![3.0, 0.7],
            ],
            vec![Label::Cnn, Label::Cnn, Label::Rnn, Label::Rnn],
            None,
        )
        .unwrap();
        let params = ClassifierParams::Forest(ForestParams {
            n_trees: 4,
            ..ForestParams::default()
        });
        train(&data, &params, 5).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let bytes = save_model(&m).unwrap();
        assert_eq!(load_model(&bytes).unwrap(), m);
        assert_eq!(save_model(&m).unwrap(), bytes);
    }

    #[test]
    fn truncated_and_tampered_files() {
        let bytes = save_model(&model()).unwrap();
        assert!(matches!(
            load_model(&bytes[..bytes.len() / 2]),
            Err(Error::CorruptModel(_))
        ));
        let text = String::from_utf8(bytes).unwrap();
        let tampered = text.replacen("\"seed\": 5", "\"seed\": 6", 1);
        assert!(matches!(
            load_model(tampered.as_bytes()),
            Err(Error::CorruptModel(_))
        ));
        let future = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            load_model(future.as_bytes()),
            Err(Error::CorruptModel(_))
        ));
    }
}
