//! The three fingerprinting classifiers behind one [`Model`] type.
//!
//! Labels are encoded CNN = +1 / RNN = -1 throughout. Trees split on raw
//! feature values; the SVM standardizes first.

mod cv;
mod forest;
mod gbm;
mod persist;
mod scaler;
mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSchema, LabeledDataset};
use crate::label::Label;

pub use self::cv::{grid_search_cv, stratified_folds, CvResult};
pub use self::forest::{train_forest, ForestModel, ForestParams};
pub use self::gbm::{sigmoid, train_gbm, GbmModel, GbmParams};
pub use self::persist::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use self::scaler::{apply_scaler, fit_scaler, Scaler};
pub use self::svm::{train_svm, Kernel, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Forest,
    Svm,
    Gbm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Forest,
        ClassifierKind::Svm,
        ClassifierKind::Gbm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Forest => "forest",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Gbm => "gbm",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Forest => "Random Forest",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Gbm => "Gradient Boosting",
        }
    }

    pub fn default_grid(self) -> Vec<ClassifierParams> {
        match self {
            ClassifierKind::Forest => {
                let mut grid = Vec::new();
                for n_trees in [50, 100, 200] {
                    for max_depth in [None, Some(4), Some(8)] {
                        grid.push(ClassifierParams::Forest(ForestParams {
                            n_trees,
                            max_depth,
                            ..ForestParams::default()
                        }));
                    }
                }
                grid
            }
            ClassifierKind::Svm => {
                let kernels = [
                    Kernel::Linear,
                    Kernel::Rbf { gamma: 0.01 },
                    Kernel::Rbf { gamma: 0.1 },
                    Kernel::Rbf { gamma: 1.0 },
                ];
                let mut grid = Vec::new();
                for c in [0.1, 1.0, 10.0, 100.0] {
                    for kernel in kernels {
                        grid.push(ClassifierParams::Svm(SvmParams {
                            c,
                            kernel,
                            ..SvmParams::default()
                        }));
                    }
                }
                grid
            }
            ClassifierKind::Gbm => {
                let mut grid = Vec::new();
                for n_rounds in [50, 100] {
                    for learning_rate in [0.05, 0.1, 0.3] {
                        for max_depth in [2, 3] {
                            grid.push(ClassifierParams::Gbm(GbmParams {
                                n_rounds,
                                learning_rate,
                                max_depth,
                            }));
                        }
                    }
                }
                grid
            }
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forest" | "rf" => Ok(ClassifierKind::Forest),
            "svm" => Ok(ClassifierKind::Svm),
            "gbm" | "xgboost" => Ok(ClassifierKind::Gbm),
            other => Err(format!("unknown classifier `{other}` (forest, svm, gbm)")),
        }
    }
}

/// One hyperparameter configuration, i.e. one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierParams {
    Forest(ForestParams),
    Svm(SvmParams),
    Gbm(GbmParams),
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::Forest(_) => ClassifierKind::Forest,
            ClassifierParams::Svm(_) => ClassifierKind::Svm,
            ClassifierParams::Gbm(_) => ClassifierKind::Gbm,
        }
    }

    /// Short human-readable description for CV tables.
    pub fn describe(&self) -> String {
        match self {
            ClassifierParams::Forest(p) => format!(
                "n_trees={} max_depth={}",
                p.n_trees,
                p.max_depth.map_or("inf".to_string(), |d| d.to_string())
            ),
            ClassifierParams::Svm(p) => match p.kernel {
                Kernel::Linear => format!("C={} kernel=linear", p.c),
                Kernel::Rbf { gamma } => format!("C={} kernel=rbf gamma={gamma}", p.c),
            },
            ClassifierParams::Gbm(p) => format!(
                "rounds={} learning_rate={} max_depth={}",
                p.n_rounds, p.learning_rate, p.max_depth
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum Model {
    Forest(ForestModel),
    Svm(SvmModel),
    Gbm(GbmModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Forest: vote fraction. SVM: |decision value|. GBM: probability of `label`.
    pub score: f64,
}

/// Trains the classifier described by `params`. `seed` drives the forest's
/// bootstrap and feature sampling; the other trainers are deterministic.
pub fn train(train: &LabeledDataset, params: &ClassifierParams, seed: u64) -> Result<Model> {
    Ok(match params {
        ClassifierParams::Forest(p) => Model::Forest(train_forest(train, p, seed)?),
        ClassifierParams::Svm(p) => Model::Svm(train_svm(train, p)?),
        ClassifierParams::Gbm(p) => Model::Gbm(train_gbm(train, p)?),
    })
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Forest(_) => ClassifierKind::Forest,
            Model::Svm(_) => ClassifierKind::Svm,
            Model::Gbm(_) => ClassifierKind::Gbm,
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        match self {
            Model::Forest(m) => &m.schema,
            Model::Svm(m) => &m.schema,
            Model::Gbm(m) => &m.schema,
        }
    }

    pub fn params(&self) -> ClassifierParams {
        match self {
            Model::Forest(m) => ClassifierParams::Forest(m.params.clone()),
            Model::Svm(m) => ClassifierParams::Svm(m.params.clone()),
            Model::Gbm(m) => ClassifierParams::Gbm(m.params.clone()),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Model::Forest(m) => m.seed,
            _ => 0,
        }
    }

    /// Continuous output before thresholding: vote fraction for CNN, SVM
    /// decision value, or boosted log-odds.
    pub fn decision_value(&self, row: &[f64]) -> Result<f64> {
        self.check_arity(row)?;
        Ok(match self {
            Model::Forest(m) => m.votes(row)[0] as f64 / m.trees.len() as f64,
            Model::Svm(m) => m.decision_value(row)?,
            Model::Gbm(m) => m.raw_score(row),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        self.check_arity(row)?;
        Ok(match self {
            Model::Forest(m) => {
                let (label, score) = m.vote(row);
                Prediction { label, score }
            }
            Model::Svm(m) => {
                let f = m.decision_value(row)?;
                Prediction {
                    label: if f >= 0.0 { Label::Cnn } else { Label::Rnn },
                    score: f.abs(),
                }
            }
            Model::Gbm(m) => {
                let p = m.probability(row);
                if p >= 0.5 {
                    Prediction {
                        label: Label::Cnn,
                        score: p,
                    }
                } else {
                    Prediction {
                        label: Label::Rnn,
                        score: 1.0 - p,
                    }
                }
            }
        })
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
        rows.iter()
            .map(|r| self.predict(r).map(|p| p.label))
            .collect()
    }

    fn check_arity(&self, row: &[f64]) -> Result<()> {
        let expected = self.schema().len();
        if row.len() != expected {
            return Err(Error::ArityMismatch {
                expected,
                found: row.len(),
            });
        }
        Ok(())
    }
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy(model: &Model, data: &LabeledDataset) -> Result<f64> {
    let predicted = model.predict_all(data.rows())?;
    let hits = predicted
        .iter()
        .zip(data.labels())
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / data.len() as f64)
}
