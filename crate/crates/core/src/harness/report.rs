//! Per-fold result tables and their text, CSV and box-plot renderings.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::metrics::{aggregate, ConfusionMatrix, MetricsRow};
use super::stats::{paired_t_test, TTest};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReportError {
    #[error("incomplete table: {0}")]
    IncompleteTable(String),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    /// 1-based.
    pub fold: usize,
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: MetricsRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub folds: Vec<FoldRow>,
    pub mean: MetricsRow,
    /// Absent with fewer than two folds.
    pub sd: Option<MetricsRow>,
}

impl ModelReport {
    pub fn new(model: impl Into<String>, folds: Vec<FoldRow>) -> Self {
        let rows: Vec<MetricsRow> = folds.iter().map(|f| f.metrics).collect();
        let (mean, sd) = match aggregate(&rows) {
            Ok((m, s)) => (m, Some(s)),
            Err(_) => (rows.first().copied().unwrap_or_default(), None),
        };
        ModelReport { model: model.into(), folds, mean, sd }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.accuracy).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub models: Vec<ModelReport>,
    /// First model's accuracies against the second's.
    pub t_test: Option<TTest>,
    pub t_test_note: Option<String>,
}

impl ReportTable {
    /// Builds the table; with two models the paired t-test compares their
    /// per-fold accuracies (first minus second).
    pub fn new(models: Vec<ModelReport>) -> Self {
        let (t_test, t_test_note) = match models.as_slice() {
            [a, b] => match paired_t_test(&a.accuracies(), &b.accuracies()) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            },
            _ => (None, None),
        };
        ReportTable { models, t_test, t_test_note }
    }

    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model.eq_ignore_ascii_case(name))
    }

    fn check_complete(&self) -> Result<usize, ReportError> {
        let first = self.models.first().ok_or_else(|| ReportError::IncompleteTable("no models".into()))?;
        let n = first.folds.len();
        for m in &self.models {
            if m.folds.is_empty() || m.folds.len() != n {
                return Err(ReportError::IncompleteTable(format!("{} has {} folds, expected {n}", m.model, m.folds.len())));
            }
            if m.folds.iter().zip(&first.folds).any(|(a, b)| a.fold != b.fold) {
                return Err(ReportError::IncompleteTable(format!("{} fold numbering differs", m.model)));
            }
        }
        if n == 0 {
            return Err(ReportError::IncompleteTable("no folds".into()));
        }
        Ok(n)
    }
}

/// Min, quartiles (linear interpolation between order statistics) and max.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn five_number_summary(x: &[f64]) -> Option<FiveNumber> {
    if x.is_empty() || x.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
    };
    Some(FiveNumber { min: s[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: s[s.len() - 1] })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
    pub boxplot_csv: String,
    pub boxplot: Vec<(String, FiveNumber)>,
}

const COLUMNS: [&str; 4] = ["Acc", "Sens", "Spec", "F"];

pub fn render_report(table: &ReportTable) -> Result<RenderedReport, ReportError> {
    let n = table.check_complete()?;
    let models = &table.models;

    let mut header = vec!["Fold".to_string()];
    for col in COLUMNS {
        for m in models {
            header.push(format!("{col} {}", m.model));
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let cells = |get: &dyn Fn(&ModelReport) -> Option<MetricsRow>| -> Vec<String> {
        (0..4)
            .flat_map(|k| models.iter().map(move |m| (k, m)))
            .map(|(k, m)| get(m).map_or("-".into(), |r| format!("{:.2}", r.values()[k])))
            .collect()
    };
    for i in 0..n {
        let mut row = vec![models[0].folds[i].fold.to_string()];
        row.extend(cells(&|m: &ModelReport| Some(m.folds[i].metrics)));
        rows.push(row);
    }
    let mut mean = vec!["Mean".to_string()];
    mean.extend(cells(&|m: &ModelReport| Some(m.mean)));
    rows.push(mean);
    let mut sd = vec!["SD".to_string()];
    sd.extend(cells(&|m: &ModelReport| m.sd));
    rows.push(sd);

    let widths: Vec<usize> =
        (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0)).collect();
    let mut text = String::new();
    let line = |cells: &[String]| cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ");
    writeln!(text, "{}", line(&header)).ok();
    writeln!(text, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")).ok();
    for r in &rows {
        writeln!(text, "{}", line(r)).ok();
    }
    match (&table.t_test, &table.t_test_note) {
        (Some(t), _) if models.len() == 2 => {
            writeln!(
                text,
                "\nPaired t-test on accuracy ({} vs {}): t = {:.4}, df = {}, p = {:.3e}",
                models[0].model, models[1].model, t.t, t.df, t.p
            )
            .ok();
        }
        (None, Some(note)) => {
            writeln!(text, "\nPaired t-test unavailable: {note}").ok();
        }
        _ => {}
    }
    let mut boxplot = Vec::new();
    for m in models {
        let s = five_number_summary(&m.accuracies()).ok_or_else(|| ReportError::IncompleteTable(format!("{} has NaN accuracy", m.model)))?;
        writeln!(
            text,
            "{} accuracy: min {:.2}, Q1 {:.2}, median {:.2}, Q3 {:.2}, max {:.2}",
            m.model, s.min, s.q1, s.median, s.q3, s.max
        )
        .ok();
        boxplot.push((m.model.clone(), s));
    }

    let csv_err = |e: csv::Error| ReportError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "fold", "accuracy", "sensitivity", "specificity", "f_score", "tp", "fn", "tn", "fp"]).map_err(csv_err)?;
    for m in models {
        let mut emit = |fold: String, r: &MetricsRow, cm: Option<ConfusionMatrix>| -> Result<(), ReportError> {
            let mut rec = vec![m.model.clone(), fold];
            rec.extend(r.values().iter().map(|v| v.to_string()));
            match cm {
                Some(c) => rec.extend([c.tp, c.fn_, c.tn, c.fp].iter().map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&rec).map_err(csv_err)
        };
        for f in &m.folds {
            emit(f.fold.to_string(), &f.metrics, f.confusion)?;
        }
        emit("mean".into(), &m.mean, None)?;
        if let Some(sd) = &m.sd {
            emit("sd".into(), sd, None)?;
        }
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))?).expect("csv output is utf-8");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "metric", "min", "q1", "median", "q3", "max"]).map_err(csv_err)?;
    for (model, s) in &boxplot {
        let vals = [s.min, s.q1, s.median, s.q3, s.max].map(|v| v.to_string());
        w.write_record([model.as_str(), "accuracy"].into_iter().chain(vals.iter().map(String::as_str))).map_err(csv_err)?;
    }
    let boxplot_csv = String::from_utf8(w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))?).expect("csv output is utf-8");

    Ok(RenderedReport { text, csv, boxplot_csv, boxplot })
}
