//! Confusion matrices, per-class precision/recall/F1 and accuracy, rendered
//! either as JSON or as a fixed-width table with one block per classifier.

use std::fmt::Write as _;

use serde::Serialize;

use crate::classifiers::Model;
use crate::error::{Error, Result};
use crate::features::LabeledDataset;
use crate::label::Label;

/// Counts indexed `[true label][predicted label]`, CNN first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn transposed_classes(&self) -> ConfusionMatrix {
        let c = self.counts;
        ConfusionMatrix::new([[c[1][1], c[1][0]], [c[0][1], c[0][0]]])
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced a metric to 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    /// Indexed by [`Label::index`].
    pub per_class: [ClassMetrics; 2],
    pub accuracy: f64,
    /// Mean of the per-class F1 scores.
    pub macro_f1: f64,
    pub misclassified: Vec<String>,
}

impl EvaluationReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.per_class[label.index()]
    }

    pub fn errors(&self) -> u64 {
        self.confusion.total() - self.confusion.correct()
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<EvaluationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let per_class = Label::ALL.map(|label| {
        let c = label.index();
        let o = label.other().index();
        let tp = cm.counts[c][c];
        let fp = cm.counts[o][c];
        let fn_ = cm.counts[c][o];
        let (precision, p_undef) = ratio(tp, tp + fp);
        let (recall, r_undef) = ratio(tp, tp + fn_);
        let (f1, f_undef) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), false)
        } else {
            (0.0, true)
        };
        ClassMetrics {
            label,
            precision,
            recall,
            f1,
            undefined: p_undef || r_undef || f_undef,
        }
    });
    Ok(EvaluationReport {
        confusion: *cm,
        accuracy: cm.correct() as f64 / total as f64,
        macro_f1: 0.5 * (per_class[0].f1 + per_class[1].f1),
        per_class,
        misclassified: Vec::new(),
    })
}

pub fn evaluate(model: &Model, test: &LabeledDataset) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::Empty);
    }
    if test.arity() != model.schema().len() {
        return Err(Error::ArityMismatch {
            expected: model.schema().len(),
            found: test.arity(),
        });
    }
    let predicted = model.predict_all(test.rows())?;
    let cm = confusion(test.labels(), &predicted)?;
    let mut report = metrics(&cm)?;
    report.misclassified = test
        .ids()
        .iter()
        .zip(test.labels().iter().zip(&predicted))
        .filter(|(_, (t, p))| t != p)
        .map(|(id, _)| id.clone())
        .collect();
    Ok(report)
}

/// Two-decimal rendering used in tables.
pub fn display2(x: f64) -> String {
    format!("{x:.2}")
}

pub fn display_percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Method | Class | Precision | Recall | F1-score | Accuracy, two rows per method.
pub fn render_table(rows: &[(&str, &EvaluationReport)]) -> String {
    let method_w = rows.iter().map(|(m, _)| m.len()).max().unwrap_or(0).max(6);
    let rule = format!(
        "+{}+-------+-----------+--------+----------+----------+\n",
        "-".repeat(method_w + 2)
    );
    let mut out = rule.clone();
    let _ = writeln!(
        out,
        "| {:<method_w$} | Class | Precision | Recall | F1-score | Accuracy |",
        "Method"
    );
    out.push_str(&rule);
    for (method, report) in rows {
        for (i, label) in Label::ALL.iter().enumerate() {
            let m = report.class(*label);
            let (name, acc) = if i == 0 {
                (*method, display_percent(report.accuracy))
            } else {
                ("", String::new())
            };
            let _ = writeln!(
                out,
                "| {name:<method_w$} | {label:<5} | {:>9} | {:>6} | {:>8} | {acc:>8} |",
                display2(m.precision),
                display2(m.recall),
                display2(m.f1),
            );
        }
        out.push_str(&rule);
    }
    out
}

#[derive(Serialize)]
struct DisplayClass {
    precision: String,
    recall: String,
    f1: String,
}

#[derive(Serialize)]
struct MachineReport<'a> {
    #[serde(flatten)]
    raw: &'a EvaluationReport,
    display: MachineDisplay,
}

#[derive(Serialize)]
struct MachineDisplay {
    accuracy: String,
    cnn: DisplayClass,
    rnn: DisplayClass,
}

/// JSON with raw metrics plus the rounded strings shown in tables.
pub fn report_json(report: &EvaluationReport) -> String {
    let class = |l: Label| {
        let m = report.class(l);
        DisplayClass {
            precision: display2(m.precision),
            recall: display2(m.recall),
            f1: display2(m.f1),
        }
    };
    let doc = MachineReport {
        raw: report,
        display: MachineDisplay {
            accuracy: display_percent(report.accuracy),
            cnn: class(Label::Cnn),
            rnn: class(Label::Rnn),
        },
    };
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}
