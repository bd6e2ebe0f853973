//! Binary logistic gradient boosting with Newton leaf values.

use serde::{Deserialize, Serialize};

use super::tree::{grow_regressor, Tree};
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, LabeledDataset};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub params: GbmParams,
    pub schema: FeatureSchema,
    /// Log-odds of CNN in the training set.
    pub initial_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss after each round.
    pub train_loss: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss of raw scores `f` against 0/1 targets, computed stably.
fn log_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&z, &t)| {
            // log(1 + e^z) - t*z
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - t * z
        })
        .sum::<f64>()
        / f.len() as f64
}

pub fn train_gbm(train: &LabeledDataset, params: &GbmParams) -> Result<GbmModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            params.learning_rate
        )));
    }
    let [pos, neg] = train.class_counts();
    let initial_score = (pos as f64 / neg as f64).ln();
    let y: Vec<f64> = train
        .labels()
        .iter()
        .map(|l| if *l == Label::Cnn { 1.0 } else { 0.0 })
        .collect();
    let x = train.rows();
    let mut f = vec![initial_score; x.len()];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_loss = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let p: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        let residuals: Vec<f64> = y.iter().zip(&p).map(|(t, q)| t - q).collect();
        let hessians: Vec<f64> = p.iter().map(|q| q * (1.0 - q)).collect();
        let tree = grow_regressor(x, &residuals, &hessians, train.labels(), params.max_depth);
        for (fi, row) in f.iter_mut().zip(x) {
            *fi += params.learning_rate * tree.predict_value(row);
        }
        train_loss.push(log_loss(&f, &y));
        trees.push(tree);
    }
    Ok(GbmModel {
        params: params.clone(),
        schema: train.schema().clone(),
        initial_score,
        trees,
        train_loss,
    })
}

impl GbmModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.initial_score
            + self
                .trees
                .iter()
                .map(|t| self.params.learning_rate * t.predict_value(row))
                .sum::<f64>()
    }

    /// Probability of CNN.
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(x: &[f64], y: &[Label]) -> LabeledDataset {
        LabeledDataset::new(
            FeatureSchema::new(vec!["x".into()]).unwrap(),
            x.iter().map(|&v| vec![v]).collect(),
            y.to_vec(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn balanced_prior_is_zero() {
        let train = ds(
            &[0.0, 1.0, 2.0, 3.0],
            &[Label::Cnn, Label::Rnn, Label::Cnn, Label::Rnn],
        );
        let model = train_gbm(
            &train,
            &GbmParams {
                n_rounds: 0,
                ..GbmParams::default()
            },
        )
        .unwrap();
        assert_eq!(model.initial_score, 0.0);
        assert_eq!(model.probability(&[0.0]), 0.5);
    }

    #[test]
    fn separable_data_gets_positive_margins() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [
            Label::Cnn,
            Label::Cnn,
            Label::Cnn,
            Label::Rnn,
            Label::Rnn,
            Label::Rnn,
        ];
        let model = train_gbm(
            &ds(&x, &y),
            &GbmParams {
                n_rounds: 10,
                learning_rate: 0.3,
                max_depth: 1,
            },
        )
        .unwrap();
        assert_eq!(model.trees.len(), 10);
        for (v, l) in x.iter().zip(&y) {
            let margin = l.sign() * model.raw_score(&[*v]);
            assert!(margin > 0.0, "row {v}: margin {margin}");
        }
        assert!(model.train_loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stable_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((log_loss(&[0.0], &[1.0]) - 2f64.ln()).abs() < 1e-15);
        assert!(log_loss(&[1000.0], &[1.0]) < 1e-12);
    }
}
