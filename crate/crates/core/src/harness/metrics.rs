//! Confusion matrices and the four per-fold percentages. Severe is the
//! positive class.

use serde::{Deserialize, Serialize};

use crate::signal_io::Class;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("confusion matrix has no {0} samples")]
    EmptyClass(&'static str),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("{truth} labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[Class], predicted: &[Class]) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch { truth: truth.len(), predicted: predicted.len() });
        }
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Class::Severe, Class::Severe) => cm.tp += 1,
                (Class::Severe, Class::Normal) => cm.fn_ += 1,
                (Class::Normal, Class::Normal) => cm.tn += 1,
                (Class::Normal, Class::Severe) => cm.fp += 1,
            }
        }
        Ok(cm)
    }

    /// Nearest-count matrix for percentage sensitivity and specificity over
    /// the given class sizes.
    pub fn from_rates(sensitivity: f64, specificity: f64, positives: u64, negatives: u64) -> Self {
        let tp = (sensitivity / 100.0 * positives as f64).round() as u64;
        let tn = (specificity / 100.0 * negatives as f64).round() as u64;
        ConfusionMatrix { tp, fn_: positives - tp, tn, fp: negatives - tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }
}

/// Percentages in `[0, 100]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f_score: f64,
    /// Set when nothing was predicted positive; `f_score` is then 0.
    #[serde(default)]
    pub f_undefined: bool,
}

impl MetricsRow {
    pub const NAMES: [&'static str; 4] = ["accuracy", "sensitivity", "specificity", "f_score"];

    pub fn values(&self) -> [f64; 4] {
        [self.accuracy, self.sensitivity, self.specificity, self.f_score]
    }

    fn from_values(v: [f64; 4]) -> Self {
        MetricsRow { accuracy: v[0], sensitivity: v[1], specificity: v[2], f_score: v[3], f_undefined: false }
    }
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsRow, MetricsError> {
    let pos = cm.tp + cm.fn_;
    let neg = cm.tn + cm.fp;
    if pos == 0 {
        return Err(MetricsError::EmptyClass("severe"));
    }
    if neg == 0 {
        return Err(MetricsError::EmptyClass("normal"));
    }
    let sens = cm.tp as f64 / pos as f64;
    let spec = cm.tn as f64 / neg as f64;
    let acc = (cm.tp + cm.tn) as f64 / (pos + neg) as f64;
    let (f, undefined) = if cm.tp + cm.fp == 0 {
        (0.0, true)
    } else {
        let prec = cm.tp as f64 / (cm.tp + cm.fp) as f64;
        (if prec + sens > 0.0 { 2.0 * prec * sens / (prec + sens) } else { 0.0 }, false)
    };
    Ok(MetricsRow { accuracy: 100.0 * acc, sensitivity: 100.0 * sens, specificity: 100.0 * spec, f_score: 100.0 * f, f_undefined: undefined })
}

/// Arithmetic mean and sample SD.
pub fn mean_sd(x: &[f64]) -> Result<(f64, f64), MetricsError> {
    if x.len() < 2 {
        return Err(MetricsError::TooFewRows(x.len()));
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    Ok((m, (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()))
}

/// Per-metric `(mean, sd)` rows.
pub fn aggregate(rows: &[MetricsRow]) -> Result<(MetricsRow, MetricsRow), MetricsError> {
    let mut mean = [0.0; 4];
    let mut sd = [0.0; 4];
    for k in 0..4 {
        let col: Vec<f64> = rows.iter().map(|r| r.values()[k]).collect();
        (mean[k], sd[k]) = mean_sd(&col)?;
    }
    Ok((MetricsRow::from_values(mean), MetricsRow::from_values(sd)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 0.005, "{a} vs {b}");
    }

    #[test]
    fn fold_rows() {
        let m = metrics_from_confusion(&ConfusionMatrix { tp: 59, fn_: 41, tn: 55, fp: 45 }).unwrap();
        close(m.accuracy, 57.00);
        close(m.sensitivity, 59.00);
        close(m.specificity, 55.00);
        close(m.f_score, 57.84);
        let m = metrics_from_confusion(&ConfusionMatrix { tp: 48, fn_: 51, tn: 69, fp: 31 }).unwrap();
        close(m.accuracy, 58.79);
        close(m.sensitivity, 48.48);
        close(m.f_score, 53.93);
        let m = metrics_from_confusion(&ConfusionMatrix { tp: 100, fn_: 0, tn: 100, fp: 0 }).unwrap();
        assert_eq!(m.values(), [100.0; 4]);
    }

    #[test]
    fn undefined_f_and_empty_class() {
        let m = metrics_from_confusion(&ConfusionMatrix { tp: 0, fn_: 10, tn: 10, fp: 0 }).unwrap();
        assert!(m.f_undefined);
        assert_eq!(m.f_score, 0.0);
        assert_eq!(metrics_from_confusion(&ConfusionMatrix { tp: 0, fn_: 0, tn: 3, fp: 1 }), Err(MetricsError::EmptyClass("severe")));
    }

    #[test]
    fn confusion_counts() {
        let t = [Class::Severe, Class::Severe, Class::Normal, Class::Normal, Class::Normal];
        let p = [Class::Severe, Class::Normal, Class::Normal, Class::Severe, Class::Normal];
        assert_eq!(ConfusionMatrix::from_predictions(&t, &p).unwrap(), ConfusionMatrix { tp: 1, fn_: 1, tn: 2, fp: 1 });
        assert_eq!(ConfusionMatrix::from_rates(48.48, 69.0, 99, 100), ConfusionMatrix { tp: 48, fn_: 51, tn: 69, fp: 31 });
    }

    #[test]
    fn aggregate_identical_rows() {
        let r = MetricsRow { accuracy: 80.0, sensitivity: 70.0, specificity: 90.0, f_score: 75.0, f_undefined: false };
        let (m, s) = aggregate(&[r, r, r]).unwrap();
        assert_eq!(m.values(), r.values());
        assert_eq!(s.values(), [0.0; 4]);
        assert_eq!(aggregate(&[r]), Err(MetricsError::TooFewRows(1)));
    }
}
