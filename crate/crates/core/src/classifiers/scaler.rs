use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{stats, LabeledDataset};

/// Per-feature z-scoring fitted on training rows. Constant features pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (mean, std) = (0..train.arity())
            .map(|j| {
                let col = train.column(j);
                (stats::mean(&col), stats::std_dev(&col))
            })
            .unzip();
        Ok(Scaler { mean, std })
    }

    pub fn arity(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| if s > 0.0 { (x - m) / s } else { x })
            .collect())
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

pub fn fit_scaler(train: &LabeledDataset) -> Result<Scaler> {
    Scaler::fit(train)
}

pub fn apply_scaler(scaler: &Scaler, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    scaler.transform_all(rows)
}
