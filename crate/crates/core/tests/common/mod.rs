//! Published per-fold results used as fixtures.
#![allow(dead_code)]

/// One classifier's row: accuracy, sensitivity, specificity, F-score (%).
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub acc: f64,
    pub sens: f64,
    pub spec: f64,
    pub f: f64,
}

pub struct Fold {
    pub fold: usize,
    pub svm: Row,
    pub dl: Row,
}

const fn row(acc: f64, sens: f64, spec: f64, f: f64) -> Row {
    Row { acc, sens, spec, f }
}

pub const TABLE: [Fold; 10] = [
    Fold { fold: 1, svm: row(57.00, 59.0, 55.0, 57.84), dl: row(80.50, 83.0, 78.0, 80.98) },
    Fold { fold: 2, svm: row(59.00, 62.0, 56.0, 60.19), dl: row(82.50, 83.0, 82.0, 82.59) },
    Fold { fold: 3, svm: row(58.79, 48.48, 69.0, 53.93), dl: row(80.50, 79.0, 82.0, 80.20) },
    Fold { fold: 4, svm: row(56.78, 57.58, 56.0, 57.00), dl: row(82.00, 77.0, 85.0, 80.21) },
    Fold { fold: 5, svm: row(55.50, 76.0, 35.0, 63.07), dl: row(82.00, 75.0, 79.0, 82.52) },
    Fold { fold: 6, svm: row(55.50, 55.0, 56.0, 55.28), dl: row(76.50, 69.0, 84.0, 74.59) },
    Fold { fold: 7, svm: row(56.28, 60.61, 52.0, 57.97), dl: row(82.50, 88.0, 77.0, 83.41) },
    Fold { fold: 8, svm: row(56.00, 54.0, 58.0, 55.10), dl: row(75.00, 72.0, 78.0, 74.23) },
    Fold { fold: 9, svm: row(49.50, 61.0, 38.0, 54.71), dl: row(73.50, 68.0, 79.0, 71.96) },
    Fold { fold: 10, svm: row(55.00, 67.0, 43.0, 59.82), dl: row(79.50, 82.0, 77.0, 80.00) },
];

/// Severe-class count of a fold's test set.
pub fn positives(fold: usize) -> u64 {
    if [3, 4, 7].contains(&fold) {
        99
    } else {
        100
    }
}

pub fn dl_acc() -> Vec<f64> {
    TABLE.iter().map(|f| f.dl.acc).collect()
}

pub fn svm_acc() -> Vec<f64> {
    TABLE.iter().map(|f| f.svm.acc).collect()
}

/// Reconstructs each candidate confusion matrix (99 or 100 severe, 100
/// normal) and returns the positive count whose recomputed accuracy and
/// F-score match the printed row within 0.01, if any.
pub fn reconcile(r: Row) -> Option<(u64, osa_core::harness::MetricsRow)> {
    use osa_core::harness::{metrics_from_confusion, ConfusionMatrix};
    [100, 99].into_iter().find_map(|pos| {
        let m = metrics_from_confusion(&ConfusionMatrix::from_rates(r.sens, r.spec, pos, 100)).ok()?;
        ((m.accuracy - r.acc).abs() <= 0.01 && (m.f_score - r.f).abs() <= 0.01).then_some((pos, m))
    })
}
