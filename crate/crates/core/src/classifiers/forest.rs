//! Random forest: bagged Gini trees with per-split feature subsampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_classifier, majority, GrowParams, Tree};
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, LabeledDataset};
use crate::label::Label;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub m_try: Option<usize>,
    /// Disabled only in test mode, where every tree sees the training set as is.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            m_try: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    /// A single unbagged tree examining every feature at every split.
    pub fn single_tree(max_depth: Option<usize>) -> Self {
        ForestParams {
            n_trees: 1,
            max_depth,
            min_samples_split: 2,
            m_try: Some(usize::MAX),
            bootstrap: false,
        }
    }

    fn resolved_m_try(&self, d: usize) -> usize {
        self.m_try
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub schema: FeatureSchema,
    /// Majority class of the training set (CNN on a tie); breaks vote ties.
    pub tie_label: Label,
    pub trees: Vec<Tree>,
}

pub(crate) fn training_majority(train: &LabeledDataset) -> Label {
    let [cnn, rnn] = train.class_counts();
    if rnn > cnn {
        Label::Rnn
    } else {
        Label::Cnn
    }
}

pub fn train_forest(
    train: &LabeledDataset,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter(
            "forest needs at least one tree".into(),
        ));
    }
    let n = train.len();
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        m_try: params.resolved_m_try(train.arity()),
    };
    let tie_label = training_majority(train);
    let trees = (0..params.n_trees)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let sample: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_classifier(
                train.rows(),
                train.labels(),
                sample,
                grow,
                tie_label,
                &mut rng,
            )
        })
        .collect();
    Ok(ForestModel {
        params: params.clone(),
        seed,
        schema: train.schema().clone(),
        tie_label,
        trees,
    })
}

impl ForestModel {
    /// Votes per class, indexed by [`Label::index`].
    pub fn votes(&self, row: &[f64]) -> [u64; 2] {
        let mut votes = [0u64; 2];
        for tree in &self.trees {
            votes[tree.predict_label(row).index()] += 1;
        }
        votes
    }

    /// Majority label and the fraction of trees voting for it.
    pub(crate) fn vote(&self, row: &[f64]) -> (Label, f64) {
        let votes = self.votes(row);
        let label = majority(votes, self.tie_label);
        (label, votes[label.index()] as f64 / self.trees.len() as f64)
    }
}
