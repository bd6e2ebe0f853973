//! Binary decision trees stored as flat node arenas (root at index 0).

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training rows per class reaching this leaf, indexed by [`Label::index`].
        counts: [u32; 2],
        prediction: Label,
        /// Additive score contribution (boosting trees only; 0 otherwise).
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf(&self, row: &[f64]) -> &Node {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict_label(&self, row: &[f64]) -> Label {
        match self.leaf(row) {
            Node::Leaf { prediction, .. } => *prediction,
            Node::Split { .. } => unreachable!("leaf() returns leaves"),
        }
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        match self.leaf(row) {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!("leaf() returns leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks the arena invariants: children exist, each node has one parent,
    /// classification leaves are non-empty.
    pub fn is_well_formed(&self) -> bool {
        let mut parents = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            if let Node::Split { left, right, .. } = node {
                if *left >= self.nodes.len() || *right >= self.nodes.len() || left == right {
                    return false;
                }
                parents[*left] += 1;
                parents[*right] += 1;
            }
        }
        parents[0] == 0 && parents[1..].iter().all(|&p| p == 1)
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    if mid < b && mid >= a {
        mid
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features examined per split.
    pub m_try: usize,
}

impl GrowParams {
    fn may_split(&self, n: usize, depth: usize) -> bool {
        n >= self.min_samples_split.max(2) && self.max_depth.is_none_or(|d| depth < d)
    }
}

/// Gini split quality as the exact rational `sum_l/n_l + sum_r/n_r`, where
/// `sum` is the sum of squared class counts. Larger means purer children.
#[derive(Clone, Copy)]
struct GiniGain {
    num: u128,
    den: u128,
}

impl GiniGain {
    fn new(left: [u64; 2], right: [u64; 2]) -> Self {
        let sq = |c: [u64; 2]| u128::from(c[0] * c[0] + c[1] * c[1]);
        let nl = u128::from(left[0] + left[1]);
        let nr = u128::from(right[0] + right[1]);
        GiniGain {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &GiniGain) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Grows a Gini classification tree on `sample` (row indices, repeats allowed).
/// Candidate features are drawn from `rng` without replacement and evaluated in
/// ascending index order; among equally good splits the first found wins.
pub(crate) fn grow_classifier<R: Rng>(
    x: &[Vec<f64>],
    y: &[Label],
    sample: Vec<usize>,
    params: GrowParams,
    tie_label: Label,
    rng: &mut R,
) -> Tree {
    let d = x.first().map_or(0, Vec::len);
    let mut nodes = Vec::new();
    let mut stack = vec![(sample, 0usize, None::<(usize, bool)>)];
    while let Some((rows, depth, parent)) = stack.pop() {
        let idx = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = idx;
                } else {
                    *right = idx;
                }
            }
        }
        let mut counts = [0u64; 2];
        for &r in &rows {
            counts[y[r].index()] += 1;
        }
        let pure = counts[0] == 0 || counts[1] == 0;
        let split = if !pure && params.may_split(rows.len(), depth) {
            let features = candidate_features(d, params.m_try, rng);
            best_gini_split(x, y, &rows, &features)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[i][feature] <= threshold);
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                // right pushed first so the left subtree is laid out first
                stack.push((r, depth + 1, Some((idx, false))));
                stack.push((l, depth + 1, Some((idx, true))));
            }
            None => nodes.push(Node::Leaf {
                counts: [counts[0] as u32, counts[1] as u32],
                prediction: majority(counts, tie_label),
                value: 0.0,
            }),
        }
    }
    Tree { nodes }
}

pub(crate) fn majority(counts: [u64; 2], tie_label: Label) -> Label {
    match counts[0].cmp(&counts[1]) {
        std::cmp::Ordering::Greater => Label::Cnn,
        std::cmp::Ordering::Less => Label::Rnn,
        std::cmp::Ordering::Equal => tie_label,
    }
}

fn candidate_features<R: Rng>(d: usize, m_try: usize, rng: &mut R) -> Vec<usize> {
    if m_try >= d {
        return (0..d).collect();
    }
    let mut picked = sample(rng, d, m_try.max(1)).into_vec();
    picked.sort_unstable();
    picked
}

fn best_gini_split(
    x: &[Vec<f64>],
    y: &[Label],
    rows: &[usize],
    features: &[usize],
) -> Option<(usize, f64)> {
    let mut total = [0u64; 2];
    for &r in rows {
        total[y[r].index()] += 1;
    }
    let mut best: Option<(GiniGain, usize, f64)> = None;
    let mut order = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left = [0u64; 2];
        for w in 0..order.len() - 1 {
            left[y[order[w]].index()] += 1;
            let (a, b) = (x[order[w]][f], x[order[w + 1]][f]);
            if a >= b {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let gain = GiniGain::new(left, right);
            if best.as_ref().is_none_or(|(g, _, _)| gain.beats(g)) {
                best = Some((gain, f, midpoint(a, b)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Grows a least-squares regression tree on `residuals` with Newton leaf
/// values `sum(residual) / max(sum(hessian), 1e-12)`.
pub(crate) fn grow_regressor(
    x: &[Vec<f64>],
    residuals: &[f64],
    hessians: &[f64],
    labels: &[Label],
    max_depth: usize,
) -> Tree {
    let d = x.first().map_or(0, Vec::len);
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..x.len()).collect();
    let mut stack = vec![(all, 0usize, None::<(usize, bool)>)];
    while let Some((rows, depth, parent)) = stack.pop() {
        let idx = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = idx;
                } else {
                    *right = idx;
                }
            }
        }
        let split = if depth < max_depth && rows.len() >= 2 {
            best_sse_split(x, residuals, &rows, d)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[i][feature] <= threshold);
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                stack.push((r, depth + 1, Some((idx, false))));
                stack.push((l, depth + 1, Some((idx, true))));
            }
            None => {
                let g: f64 = rows.iter().map(|&i| residuals[i]).sum();
                let h: f64 = rows.iter().map(|&i| hessians[i]).sum();
                let mut counts = [0u64; 2];
                for &i in &rows {
                    counts[labels[i].index()] += 1;
                }
                let value = g / h.max(1e-12);
                nodes.push(Node::Leaf {
                    counts: [counts[0] as u32, counts[1] as u32],
                    prediction: if value >= 0.0 { Label::Cnn } else { Label::Rnn },
                    value,
                });
            }
        }
    }
    Tree { nodes }
}

fn best_sse_split(x: &[Vec<f64>], r: &[f64], rows: &[usize], d: usize) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|&i| r[i]).sum();
    let parent = total * total / n;
    let scale = rows
        .iter()
        .map(|&i| r[i] * r[i])
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = rows.to_vec();
    for f in 0..d {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left_sum = 0.0;
        for w in 0..order.len() - 1 {
            left_sum += r[order[w]];
            let (a, b) = (x[order[w]][f], x[order[w + 1]][f]);
            if a >= b {
                continue;
            }
            let nl = (w + 1) as f64;
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / nl + right_sum * right_sum / (n - nl);
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, f, midpoint(a, b)));
            }
        }
    }
    // require a real reduction in squared error
    best.filter(|(s, _, _)| s - parent > 1e-12 * scale)
        .map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn one_dimensional_stump() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![Label::Cnn, Label::Rnn];
        let params = GrowParams {
            max_depth: Some(1),
            min_samples_split: 2,
            m_try: 1,
        };
        let tree = grow_classifier(&x, &y, vec![0, 1], params, Label::Cnn, &mut stream(0, 0));
        match &tree.nodes()[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!((*feature, *threshold), (0, 0.5));
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.predict_label(&[0.0]), Label::Cnn);
        assert_eq!(tree.predict_label(&[1.0]), Label::Rnn);
        assert!(tree.is_well_formed());
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn gini_gain_prefers_purer_split() {
        let pure = GiniGain::new([2, 0], [0, 2]);
        let mixed = GiniGain::new([1, 1], [1, 1]);
        assert!(pure.beats(&mixed));
        assert!(!mixed.beats(&pure));
        assert!(!pure.beats(&pure));
    }

    #[test]
    fn midpoint_stays_left_of_upper_value() {
        let a: f64 = 1.0;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
        assert_eq!(midpoint(2.0, 4.0), 3.0);
    }

    #[test]
    fn regressor_newton_leaves() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let r = [0.5, 0.5, -0.5, -0.5];
        let h = [0.25; 4];
        let labels = [Label::Cnn, Label::Cnn, Label::Rnn, Label::Rnn];
        let tree = grow_regressor(&x, &r, &h, &labels, 1);
        assert_eq!(tree.predict_value(&[0.0]), 2.0);
        assert_eq!(tree.predict_value(&[3.0]), -2.0);
        // constant residuals: no useful split
        let flat = grow_regressor(&x, &[0.5; 4], &h, &labels, 3);
        assert_eq!(flat.nodes().len(), 1);
    }
}
