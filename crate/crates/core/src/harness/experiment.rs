//! End-to-end cross-validation over a set of event windows.
//!
//! Run directory layout:
//!
//! ```text
//! config.txt            effective configuration
//! excluded.csv          windows dropped because features failed
//! folds/fold_NN.json    fold plans
//! fold_NN/              per-fold models, predictions, histories, metrics
//! report.{json,txt,csv} boxplot.csv
//! FAILED                present only when the run stopped early
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use osa_nn::{checkpoint, predict, train, write_history_csv, Example, Precision, Scalar};
use serde::Serialize;

use super::config::ExperimentConfig;
use super::folds::{make_folds, select_samples, FoldPlan};
use super::metrics::{metrics_from_confusion, ConfusionMatrix};
use super::report::{render_report, FoldRow, ModelReport, ReportTable};
use super::HarnessError;
use crate::dsp::EventWindow;
use crate::hrv::{extract_feature_vector, FeatureRow, FeatureVector};
use crate::signal_io::Class;
use crate::svm::SvmClassifier;

pub const FAILURE_MARKER: &str = "FAILED";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Data(e.to_string()))?;
    write(path, text + "\n")
}

/// Feature vectors for every window, or the reason each one failed.
pub fn compute_features(windows: &[EventWindow], cfg: &ExperimentConfig) -> Vec<Result<FeatureVector, String>> {
    windows
        .iter()
        .map(|w| match extract_feature_vector(w, &cfg.features) {
            Ok(f) if f.is_finite() => Ok(f),
            Ok(_) => Err("non-finite feature".into()),
            Err(e) => Err(e.to_string()),
        })
        .collect()
}

/// Windows usable by both classifiers, with their features.
#[derive(Clone, Debug)]
pub struct Pool<'a> {
    pub windows: Vec<&'a EventWindow>,
    pub features: Vec<FeatureVector>,
    pub excluded: Vec<(String, String)>,
}

/// Keeps windows whose features are all finite; `precomputed` rows are
/// matched by window id, missing ones count as excluded.
pub fn build_pool<'a>(
    windows: &'a [EventWindow],
    precomputed: Option<&[FeatureRow]>,
    cfg: &ExperimentConfig,
) -> Result<Pool<'a>, HarnessError> {
    let mut seen = HashMap::new();
    for w in windows {
        if seen.insert(w.window_id(), ()).is_some() {
            return Err(HarnessError::Data(format!("duplicate window id {}", w.window_id())));
        }
    }
    let results: Vec<Result<FeatureVector, String>> = match precomputed {
        None => compute_features(windows, cfg),
        Some(rows) => {
            let table: HashMap<&str, &FeatureRow> = rows.iter().map(|r| (r.window_id.as_str(), r)).collect();
            windows
                .iter()
                .map(|w| match table.get(w.window_id().as_str()) {
                    Some(r) if r.label != w.label => Err(format!("feature table label {} disagrees", r.label.name())),
                    Some(r) if r.features.is_finite() => Ok(r.features),
                    Some(_) => Err("non-finite feature".into()),
                    None => Err("missing from feature table".into()),
                })
                .collect()
        }
    };
    let mut pool = Pool { windows: Vec::new(), features: Vec::new(), excluded: Vec::new() };
    for (w, r) in windows.iter().zip(results) {
        match r {
            Ok(f) => {
                pool.windows.push(w);
                pool.features.push(f);
            }
            Err(reason) => {
                log::warn!("excluding window {}: {reason}", w.window_id());
                pool.excluded.push((w.window_id(), reason));
            }
        }
    }
    Ok(pool)
}

#[derive(Serialize)]
struct Prediction<'a> {
    window_id: &'a str,
    truth: &'static str,
    predicted: &'static str,
    score: f64,
}

fn write_predictions(path: &Path, rows: &[Prediction<'_>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Data(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}

struct FoldData<'p> {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
    pool: &'p Pool<'p>,
}

impl FoldData<'_> {
    fn labels(&self, idx: &[usize]) -> Vec<Class> {
        idx.iter().map(|&i| self.pool.windows[i].label).collect()
    }
}

fn run_svm(fold: &FoldData<'_>, cfg: &ExperimentConfig, dir: &Path) -> Result<ConfusionMatrix, HarnessError> {
    let x: Vec<Vec<f64>> = fold.train.iter().map(|&i| fold.pool.features[i].to_array().to_vec()).collect();
    let params = crate::svm::SvmParams { seed: cfg.svm_seed, ..cfg.svm.clone() };
    let model = SvmClassifier::fit(&x, &fold.labels(&fold.train), &params)?;
    model.save(&dir.join("svm_model.json"))?;
    let mut predicted = Vec::new();
    let mut rows = Vec::new();
    let ids: Vec<String> = fold.test.iter().map(|&i| fold.pool.windows[i].window_id()).collect();
    for (k, &i) in fold.test.iter().enumerate() {
        let (c, score) = model.predict(&fold.pool.features[i].to_array())?;
        predicted.push(c);
        rows.push(Prediction { window_id: &ids[k], truth: fold.pool.windows[i].label.name(), predicted: c.name(), score });
    }
    write_predictions(&dir.join("svm_predictions.csv"), &rows)?;
    Ok(ConfusionMatrix::from_predictions(&fold.labels(&fold.test), &predicted)?)
}

fn run_dl<T: Scalar>(fold: &FoldData<'_>, cfg: &ExperimentConfig, fold_index: usize, dir: &Path) -> Result<ConfusionMatrix, HarnessError> {
    let examples = |idx: &[usize]| -> Vec<Example<'_>> {
        idx.iter().map(|&i| Example { input: &fold.pool.windows[i].samples, label: fold.pool.windows[i].label.index() }).collect()
    };
    let mut nn = cfg.nn.clone();
    nn.seed = cfg.nn_seed.wrapping_add(fold_index as u64);
    let outcome = train::<T>(&nn, &examples(&fold.train), &examples(&fold.val))?;
    log::info!("fold {fold_index}: best epoch {} of {}", outcome.best_epoch, outcome.history.len());
    checkpoint::save(&outcome.model, &dir.join("dl_model.ckpt"))?;
    let hist_path = dir.join("dl_history.csv");
    let mut buf = Vec::new();
    write_history_csv(&outcome.history, &mut buf).map_err(io_err(&hist_path))?;
    write(&hist_path, buf)?;

    let inputs: Vec<&[f64]> = fold.test.iter().map(|&i| fold.pool.windows[i].samples.as_slice()).collect();
    let probs = predict(&outcome.model, &inputs, nn.batch_size)?;
    let ids: Vec<String> = fold.test.iter().map(|&i| fold.pool.windows[i].window_id()).collect();
    let mut predicted = Vec::new();
    let mut rows = Vec::new();
    for (k, p) in probs.iter().enumerate() {
        let c = if p[Class::Severe.index()] > p[Class::Normal.index()] { Class::Severe } else { Class::Normal };
        predicted.push(c);
        let truth = fold.pool.windows[fold.test[k]].label;
        rows.push(Prediction { window_id: &ids[k], truth: truth.name(), predicted: c.name(), score: p[Class::Severe.index()] });
    }
    write_predictions(&dir.join("dl_predictions.csv"), &rows)?;
    Ok(ConfusionMatrix::from_predictions(&fold.labels(&fold.test), &predicted)?)
}

/// Runs the configured classifiers over every fold and writes all
/// artefacts under `run_dir`. On error a `FAILED` marker holding the
/// message is left next to whatever was already written.
pub fn run_experiment(
    windows: &[EventWindow],
    precomputed: Option<&[FeatureRow]>,
    cfg: &ExperimentConfig,
    run_dir: &Path,
) -> Result<ReportTable, HarnessError> {
    fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
    let marker = run_dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(io_err(&marker))?;
    }
    let result = run_inner(windows, precomputed, cfg, run_dir);
    if let Err(e) = &result {
        // best effort: the original error matters more than this write
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn run_inner(
    windows: &[EventWindow],
    precomputed: Option<&[FeatureRow]>,
    cfg: &ExperimentConfig,
    run_dir: &Path,
) -> Result<ReportTable, HarnessError> {
    if cfg.models.dl() {
        cfg.nn.validate()?;
    }
    write(&run_dir.join("config.txt"), cfg.to_text())?;
    let pool = build_pool(windows, precomputed, cfg)?;
    {
        let path = run_dir.join("excluded.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| HarnessError::Data(e.to_string()))?;
        w.write_record(["window_id", "reason"]).map_err(|e| HarnessError::Data(e.to_string()))?;
        for (id, reason) in &pool.excluded {
            w.write_record([id, reason]).map_err(|e| HarnessError::Data(e.to_string()))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    log::info!("{} windows usable, {} excluded", pool.windows.len(), pool.excluded.len());

    let labels: Vec<Class> = pool.windows.iter().map(|w| w.label).collect();
    let selected = select_samples(&labels, cfg.per_class, cfg.selection_seed)?;
    let ids: Vec<(String, Class)> = selected.iter().map(|&i| (pool.windows[i].window_id(), labels[i])).collect();
    let plans = make_folds(&ids, cfg.folds, cfg.fold_seed)?;
    let index: HashMap<&str, usize> = selected.iter().zip(&ids).map(|(&i, (id, _))| (id.as_str(), i)).collect();

    let folds_dir = run_dir.join("folds");
    fs::create_dir_all(&folds_dir).map_err(io_err(&folds_dir))?;
    let mut svm_rows = Vec::new();
    let mut dl_rows = Vec::new();
    for plan in &plans {
        write_json(&folds_dir.join(format!("fold_{:02}.json", plan.fold_index)), plan)?;
        let dir = run_dir.join(format!("fold_{:02}", plan.fold_index));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let lookup = |v: &[String]| v.iter().map(|id| index[id.as_str()]).collect::<Vec<_>>();
        let FoldPlan { fold_index, test_ids, val_ids, train_ids } = plan;
        let fold = FoldData { train: lookup(train_ids), val: lookup(val_ids), test: lookup(test_ids), pool: &pool };

        let mut fold_metrics = serde_json::Map::new();
        if cfg.models.svm() {
            let cm = run_svm(&fold, cfg, &dir)?;
            let row = FoldRow { fold: *fold_index, confusion: Some(cm), metrics: metrics_from_confusion(&cm)? };
            log::info!("fold {fold_index} SVM accuracy {:.2}", row.metrics.accuracy);
            fold_metrics.insert("svm".into(), serde_json::to_value(&row).expect("plain data"));
            svm_rows.push(row);
        }
        if cfg.models.dl() {
            let cm = match cfg.nn.precision {
                Precision::F32 => run_dl::<f32>(&fold, cfg, *fold_index, &dir)?,
                Precision::F64 => run_dl::<f64>(&fold, cfg, *fold_index, &dir)?,
            };
            let row = FoldRow { fold: *fold_index, confusion: Some(cm), metrics: metrics_from_confusion(&cm)? };
            log::info!("fold {fold_index} DL accuracy {:.2}", row.metrics.accuracy);
            fold_metrics.insert("dl".into(), serde_json::to_value(&row).expect("plain data"));
            dl_rows.push(row);
        }
        write_json(&dir.join("metrics.json"), &fold_metrics)?;
    }

    let mut models = Vec::new();
    if cfg.models.dl() {
        models.push(ModelReport::new("DL", dl_rows));
    }
    if cfg.models.svm() {
        models.push(ModelReport::new("SVM", svm_rows));
    }
    let table = ReportTable::new(models);
    write_report(&table, run_dir)?;
    Ok(table)
}

/// Writes `report.json`, `report.txt`, `report.csv` and `boxplot.csv`.
pub fn write_report(table: &ReportTable, run_dir: &Path) -> Result<(), HarnessError> {
    let rendered = render_report(table)?;
    write_json(&run_dir.join("report.json"), table)?;
    write(&run_dir.join("report.txt"), &rendered.text)?;
    write(&run_dir.join("report.csv"), &rendered.csv)?;
    write(&run_dir.join("boxplot.csv"), &rendered.boxplot_csv)
}

pub fn read_report(run_dir: &Path) -> Result<ReportTable, HarnessError> {
    let path = run_dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}
