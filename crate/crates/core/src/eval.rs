//! Confusion matrices and accuracy / precision / recall / F1 reports.
//!
//! Class 1 (insincere) is the positive class of the confusion matrix. Per-class
//! figures for class 0 are obtained by swapping the roles of the two classes.
//! Undefined ratios (zero denominators) are reported as 0 and listed in
//! [`MetricsReport::warnings`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("label vectors differ in length ({truth} vs {predicted})")]
    Length { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same matrix with class 0 treated as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_positive(), predicted.is_positive()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Length {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm.record(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Indexed by label: `[sincere, insincere]`.
    pub per_class: [ClassMetrics; 2],
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    #[serde(rename = "weighted")]
    pub weighted_avg: Averages,
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64, what: &str, class: u8, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!(
            "{what} of class {class} is undefined (zero denominator); reported as 0"
        ));
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(cm: &ConfusionMatrix, class: u8, warnings: &mut Vec<String>) -> ClassMetrics {
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", class, warnings);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", class, warnings);
    let f1 = if precision + recall == 0.0 {
        warnings.push(format!(
            "F1 of class {class} is undefined (precision + recall = 0); reported as 0"
        ));
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: cm.tp + cm.fn_,
    }
}

/// Full report from a confusion matrix. Panics on an empty matrix.
pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let total = cm.total();
    assert!(total > 0, "metrics of an empty confusion matrix");
    let mut warnings = Vec::new();
    let negative = class_metrics(&cm.swapped(), 0, &mut warnings);
    let positive = class_metrics(cm, 1, &mut warnings);
    let per_class = [negative, positive];

    let macro_avg = Averages {
        precision: (negative.precision + positive.precision) / 2.0,
        recall: (negative.recall + positive.recall) / 2.0,
        f1: (negative.f1 + positive.f1) / 2.0,
    };
    let (s0, s1) = (negative.support as f64, positive.support as f64);
    let weighted = |a: f64, b: f64| (s0 * a + s1 * b) / (s0 + s1);
    let weighted_avg = Averages {
        precision: weighted(negative.precision, positive.precision),
        recall: weighted(negative.recall, positive.recall),
        f1: weighted(negative.f1, positive.f1),
    };

    MetricsReport {
        confusion: *cm,
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        per_class,
        macro_avg,
        weighted_avg,
        warnings,
    }
}

impl MetricsReport {
    /// `metric,value` rows; values use the shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let cm = &self.confusion;
        for (k, v) in [("tp", cm.tp), ("fn", cm.fn_), ("fp", cm.fp), ("tn", cm.tn)] {
            let _ = writeln!(out, "{k},{v}");
        }
        let _ = writeln!(out, "accuracy,{}", self.accuracy);
        for (c, m) in self.per_class.iter().enumerate() {
            let _ = writeln!(out, "class_{c}_precision,{}", m.precision);
            let _ = writeln!(out, "class_{c}_recall,{}", m.recall);
            let _ = writeln!(out, "class_{c}_f1,{}", m.f1);
            let _ = writeln!(out, "class_{c}_support,{}", m.support);
        }
        for (name, a) in [("macro", &self.macro_avg), ("weighted", &self.weighted_avg)] {
            let _ = writeln!(out, "{name}_precision,{}", a.precision);
            let _ = writeln!(out, "{name}_recall,{}", a.recall);
            let _ = writeln!(out, "{name}_f1,{}", a.f1);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let cm = &self.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "                 Predicted YES   Predicted NO");
        let _ = writeln!(s, "Actual YES       {:>13}   {:>12}", cm.tp, cm.fn_);
        let _ = writeln!(s, "Actual NO        {:>13}   {:>12}", cm.fp, cm.tn);
        let _ = writeln!(s);
        let _ = writeln!(s, "accuracy  {:.4}", self.accuracy);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<12}{:>10}{:>10}{:>10}{:>10}",
            "", "precision", "recall", "f1", "support"
        );
        for (c, m) in self.per_class.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10}",
                format!("class {c}"),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let n = cm.total();
        for (name, a) in [("macro", &self.macro_avg), ("weighted", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10}",
                name, a.precision, a.recall, a.f1, n
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}
