//! Reference implementations written independently of the library, used
//! to cross-check it.
#![allow(dead_code)]

use flprint_core::Label;

/// Exhaustive-split Gini tree grown to purity. Splits are scored in
/// floating point; ties within 1e-12 go to the earlier (feature, threshold).
pub enum OracleTree {
    Leaf(Label),
    Split(usize, f64, Box<OracleTree>, Box<OracleTree>),
}

impl OracleTree {
    pub fn predict(&self, row: &[f64]) -> Label {
        match self {
            OracleTree::Leaf(l) => *l,
            OracleTree::Split(f, t, l, r) => {
                if row[*f] <= *t {
                    l.predict(row)
                } else {
                    r.predict(row)
                }
            }
        }
    }
}

fn weighted_gini(x: &[Vec<f64>], y: &[Label], rows: &[usize], f: usize, t: f64) -> f64 {
    let mut side = [[0.0f64; 2]; 2];
    for &r in rows {
        let s = usize::from(x[r][f] > t);
        let c = usize::from(y[r] == Label::Rnn);
        side[s][c] += 1.0;
    }
    side.iter()
        .map(|c| {
            let n = c[0] + c[1];
            if n == 0.0 {
                0.0
            } else {
                n * (1.0 - (c[0] / n).powi(2) - (c[1] / n).powi(2))
            }
        })
        .sum::<f64>()
        / rows.len() as f64
}

pub fn brute_force_tree(x: &[Vec<f64>], y: &[Label]) -> OracleTree {
    let cnn = y.iter().filter(|&&l| l == Label::Cnn).count();
    let tie = if y.len() - cnn > cnn {
        Label::Rnn
    } else {
        Label::Cnn
    };
    grow(x, y, &(0..y.len()).collect::<Vec<_>>(), tie)
}

fn grow(x: &[Vec<f64>], y: &[Label], rows: &[usize], tie: Label) -> OracleTree {
    let cnn = rows.iter().filter(|&&r| y[r] == Label::Cnn).count();
    let rnn = rows.len() - cnn;
    let leaf = OracleTree::Leaf(match cnn.cmp(&rnn) {
        std::cmp::Ordering::Greater => Label::Cnn,
        std::cmp::Ordering::Less => Label::Rnn,
        std::cmp::Ordering::Equal => tie,
    });
    if cnn == 0 || rnn == 0 || rows.len() < 2 {
        return leaf;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let g = weighted_gini(x, y, rows, f, t);
            if best.is_none_or(|(bg, _, _)| g < bg - 1e-12) {
                best = Some((g, f, t));
            }
        }
    }
    match best {
        None => leaf,
        Some((_, f, t)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= t);
            OracleTree::Split(
                f,
                t,
                Box::new(grow(x, y, &l, tie)),
                Box::new(grow(x, y, &r, tie)),
            )
        }
    }
}

/// Per-class (precision, recall, f1) by direct counting, plus accuracy.
pub struct CountedMetrics {
    pub accuracy: f64,
    pub per_class: [(f64, f64, f64); 2],
}

pub fn count_metrics(truth: &[Label], predicted: &[Label]) -> CountedMetrics {
    let n = truth.len() as f64;
    let correct = truth.iter().zip(predicted).filter(|(a, b)| a == b).count() as f64;
    let class = |l: Label| {
        let tp = truth
            .iter()
            .zip(predicted)
            .filter(|(t, p)| **t == l && **p == l)
            .count() as f64;
        let said = predicted.iter().filter(|&&p| p == l).count() as f64;
        let is = truth.iter().filter(|&&t| t == l).count() as f64;
        let p = if said == 0.0 { 0.0 } else { tp / said };
        let r = if is == 0.0 { 0.0 } else { tp / is };
        let f = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        (p, r, f)
    };
    CountedMetrics {
        accuracy: correct / n,
        per_class: [class(Label::Cnn), class(Label::Rnn)],
    }
}

/// Deterministic small integer feature matrices: `n` rows by `d` columns
/// with values in `0..levels`.
pub fn small_matrix(n: usize, d: usize, levels: u64, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % levels) as f64
                })
                .collect()
        })
        .collect()
}

/// Every labeling of `n` rows that contains both classes.
pub fn two_class_patterns(n: usize) -> impl Iterator<Item = Vec<Label>> {
    (1u32..(1 << n) - 1).map(move |mask| {
        (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    Label::Rnn
                } else {
                    Label::Cnn
                }
            })
            .collect()
    })
}
