//! Stratified k-fold grid search.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{accuracy, train, ClassifierParams};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;
use crate::label::Label;
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub grid: Vec<ClassifierParams>,
    /// Held-out accuracy per grid point, per fold.
    pub fold_accuracy: Vec<Vec<f64>>,
    pub mean_accuracy: Vec<f64>,
    /// First grid index attaining the best mean accuracy.
    pub chosen: usize,
    /// Folds actually used after capping at the smallest class size.
    pub k_folds: usize,
}

impl CvResult {
    pub fn best(&self) -> &ClassifierParams {
        &self.grid[self.chosen]
    }

    /// `index,params,mean_accuracy,chosen` rows.
    pub fn to_table(&self) -> String {
        let mut out = String::from("index,params,mean_accuracy,chosen\n");
        for (i, (p, acc)) in self.grid.iter().zip(&self.mean_accuracy).enumerate() {
            out.push_str(&format!(
                "{i},{},{acc},{}\n",
                p.describe(),
                if i == self.chosen { "*" } else { "" }
            ));
        }
        out
    }
}

/// Fold index per row. Each class is shuffled with its own seeded stream and
/// dealt round-robin, so folds keep the class proportions.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut stream(derive_seed(seed, &[class.index() as u64]), 0));
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

pub fn grid_search_cv(
    train_set: &LabeledDataset,
    grid: &[ClassifierParams],
    k_folds: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if k_folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "k_folds must be at least 2, got {k_folds}"
        )));
    }
    let counts = train_set.class_counts();
    for class in Label::ALL {
        if counts[class.index()] < 2 {
            return Err(Error::TooFewSamples {
                label: class.to_string(),
                count: counts[class.index()],
            });
        }
    }
    let k = k_folds.min(counts[0]).min(counts[1]);
    let folds = stratified_folds(train_set.labels(), k, seed);
    let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..k)
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) =
                (0..train_set.len()).partition(|&i| folds[i] == f);
            (train_set.subset(&kept), train_set.subset(&held))
        })
        .collect();

    let mut fold_accuracy = Vec::with_capacity(grid.len());
    for params in grid {
        let per_fold = splits
            .iter()
            .enumerate()
            .map(|(f, (fit, held))| {
                let model = train(fit, params, derive_seed(seed, &[f as u64]))?;
                accuracy(&model, held)
            })
            .collect::<Result<Vec<f64>>>()?;
        fold_accuracy.push(per_fold);
    }
    let mean_accuracy: Vec<f64> = fold_accuracy
        .iter()
        .map(|a| a.iter().sum::<f64>() / a.len() as f64)
        .collect();
    let mut chosen = 0;
    for (i, &acc) in mean_accuracy.iter().enumerate() {
        if acc > mean_accuracy[chosen] {
            chosen = i;
        }
    }
    Ok(CvResult {
        grid: grid.to_vec(),
        fold_accuracy,
        mean_accuracy,
        chosen,
        k_folds: k,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{ForestParams, Kernel, SvmParams};
    use super::*;
    use crate::features::FeatureSchema;

    fn separable(n_per_class: usize) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            rows.push(vec![i as f64 * 0.1, 1.0]);
            labels.push(Label::Cnn);
            rows.push(vec![10.0 + i as f64 * 0.1, -1.0]);
            labels.push(Label::Rnn);
        }
        LabeledDataset::new(
            FeatureSchema::new(vec!["a".into(), "b".into()]).unwrap(),
            rows,
            labels,
            None,
        )
        .unwrap()
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let labels: Vec<Label> = (0..20).map(|i| Label::from_index(i % 2)).collect();
        let folds = stratified_folds(&labels, 5, 3);
        for f in 0..5 {
            for class in Label::ALL {
                let n = (0..20)
                    .filter(|&i| folds[i] == f && labels[i] == class)
                    .count();
                assert_eq!(n, 2);
            }
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 3));
        assert_ne!(folds, stratified_folds(&labels, 5, 4));
    }

    #[test]
    fn single_point_grid() {
        let grid = vec![ClassifierParams::Forest(ForestParams {
            n_trees: 5,
            ..ForestParams::default()
        })];
        let cv = grid_search_cv(&separable(6), &grid, 5, 0).unwrap();
        assert_eq!(cv.chosen, 0);
        assert_eq!(cv.k_folds, 5);
        assert_eq!(cv.mean_accuracy, vec![1.0]);
    }

    #[test]
    fn ties_prefer_the_first_point() {
        let p = ClassifierParams::Forest(ForestParams {
            n_trees: 3,
            ..ForestParams::default()
        });
        let cv = grid_search_cv(&separable(6), &[p.clone(), p], 3, 0).unwrap();
        assert_eq!(cv.mean_accuracy[0], cv.mean_accuracy[1]);
        assert_eq!(cv.chosen, 0);
    }

    #[test]
    fn picks_the_separating_configuration() {
        // Overlapping classes along `a`; only a large C with a narrow RBF
        // memorizes the alternating pattern well enough.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..12 {
            let label = Label::from_index(i % 2);
            rows.push(vec![i as f64, if label == Label::Cnn { 0.2 } else { -0.2 }]);
            labels.push(label);
        }
        let data = LabeledDataset::new(
            FeatureSchema::new(vec!["a".into(), "b".into()]).unwrap(),
            rows,
            labels,
            None,
        )
        .unwrap();
        let underfit = ClassifierParams::Svm(SvmParams {
            c: 1e-4,
            kernel: Kernel::Linear,
            ..SvmParams::default()
        });
        let separating = ClassifierParams::Svm(SvmParams {
            c: 100.0,
            kernel: Kernel::Linear,
            ..SvmParams::default()
        });
        let cv = grid_search_cv(&data, &[underfit, separating], 3, 1).unwrap();
        assert_eq!(cv.mean_accuracy[1], 1.0);
        assert!(cv.mean_accuracy[0] < 1.0);
        assert_eq!(cv.chosen, 1);
    }

    #[test]
    fn error_paths() {
        let data = separable(3);
        assert!(matches!(
            grid_search_cv(&data, &[], 3, 0),
            Err(Error::EmptyGrid)
        ));
        let tiny = data.subset(&[0, 1, 2]);
        assert!(matches!(
            grid_search_cv(&tiny, &ClassifierKind::Forest.default_grid(), 3, 0),
            Err(Error::TooFewSamples { .. })
        ));
        let cv = grid_search_cv(
            &data,
            &[ClassifierParams::Forest(ForestParams::default())],
            10,
            0,
        )
        .unwrap();
        assert_eq!(cv.k_folds, 3);
    }

    use super::super::ClassifierKind;
}
