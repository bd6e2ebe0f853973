//! Soft-margin SVM trained with sequential minimal optimization.
//!
//! Works on standardized features. Pairs `(i, j)` are chosen
//! deterministically: for each `i` violating the KKT conditions, the partner
//! maximizing `|E_i - E_j|` is tried first, then the remaining rows in cyclic
//! order until one pair makes progress.

use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, LabeledDataset};

/// Alphas at or below this are dropped from the support set.
const ALPHA_EPS: f64 = 1e-8;
/// Minimum change in an alpha for a step to count as progress.
const STEP_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    pub tol: f64,
    /// Consecutive sweeps without an update required to stop.
    pub max_passes: usize,
    /// Hard cap on sweeps; hitting it marks the model unconverged.
    pub max_sweeps: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: Kernel::Rbf { gamma: 0.1 },
            tol: 1e-3,
            max_passes: 5,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub schema: FeatureSchema,
    pub scaler: Scaler,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub sweeps: usize,
}

impl SvmModel {
    /// Decision value on a raw (unscaled) row.
    pub fn decision_value(&self, row: &[f64]) -> Result<f64> {
        let z = self.scaler.transform(row)?;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.params.kernel.eval(sv, &z))
            .sum::<f64>()
            + self.bias)
    }
}

pub fn train_svm(train: &LabeledDataset, params: &SvmParams) -> Result<SvmModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    if !(params.c > 0.0 && params.c.is_finite()) || !(params.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SVM needs C > 0 and tol > 0, got C={} tol={}",
            params.c, params.tol
        )));
    }
    if let Kernel::Rbf { gamma } = params.kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "RBF gamma must be positive, got {gamma}"
            )));
        }
    }

    let scaler = Scaler::fit(train)?;
    let x = scaler.transform_all(train.rows())?;
    let y: Vec<f64> = train.labels().iter().map(|l| l.sign()).collect();
    let n = x.len();
    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| params.kernel.eval(&x[i], &x[j])).collect())
        .collect();

    let mut smo = Smo {
        k: &kernel,
        y: &y,
        c: params.c,
        alpha: vec![0.0; n],
        bias: 0.0,
        f: vec![0.0; n],
    };

    let mut quiet_sweeps = 0;
    let mut sweeps = 0;
    while quiet_sweeps < params.max_passes && sweeps < params.max_sweeps {
        let mut changed = 0;
        for i in 0..n {
            let r = smo.error(i) * y[i];
            let violates = (r < -params.tol && smo.alpha[i] < params.c)
                || (r > params.tol && smo.alpha[i] > 0.0);
            if violates && smo.step_for(i) {
                changed += 1;
            }
        }
        sweeps += 1;
        if changed == 0 {
            quiet_sweeps += 1;
        } else {
            quiet_sweeps = 0;
        }
    }

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if smo.alpha[i] > ALPHA_EPS {
            support_vectors.push(x[i].clone());
            alphas.push(smo.alpha[i]);
            coefficients.push(smo.alpha[i] * y[i]);
        }
    }
    Ok(SvmModel {
        params: params.clone(),
        schema: train.schema().clone(),
        scaler,
        support_vectors,
        alphas,
        coefficients,
        bias: smo.bias,
        converged: quiet_sweeps >= params.max_passes,
        sweeps,
    })
}

struct Smo<'a> {
    k: &'a [Vec<f64>],
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    bias: f64,
    /// Cached `sum_m alpha_m y_m K(m, i)`, bias excluded.
    f: Vec<f64>,
}

impl Smo<'_> {
    fn error(&self, i: usize) -> f64 {
        self.f[i] + self.bias - self.y[i]
    }

    fn step_for(&mut self, i: usize) -> bool {
        let n = self.alpha.len();
        let ei = self.error(i);
        let first = (0..n).filter(|&j| j != i).max_by(|&a, &b| {
            (ei - self.error(a))
                .abs()
                .total_cmp(&(ei - self.error(b)).abs())
                .then(b.cmp(&a))
        });
        let Some(first) = first else {
            return false;
        };
        if self.take_step(i, first) {
            return true;
        }
        (1..n)
            .map(|off| (i + off) % n)
            .filter(|&j| j != first)
            .any(|j| self.take_step(i, j))
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (ei, ej) = (self.error(i), self.error(j));
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let (kii, kjj, kij) = (self.k[i][i], self.k[j][j], self.k[i][j]);
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < STEP_EPS {
            return false;
        }
        let ai_new = ai + yi * yj * (aj - aj_new);
        let (di, dj) = (ai_new - ai, aj_new - aj);

        let b1 = self.bias - ei - yi * di * kii - yj * dj * kij;
        let b2 = self.bias - ej - yi * di * kij - yj * dj * kjj;
        self.bias = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        for (m, fm) in self.f.iter_mut().enumerate() {
            *fm += yi * di * self.k[i][m] + yj * dj * self.k[j][m];
        }
        true
    }
}
