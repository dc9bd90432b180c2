//! Fold planning, experiment orchestration, metrics, statistics and reports.

mod cohort;
mod config;
mod experiment;
mod folds;
mod metrics;
mod report;
mod stats;

pub use cohort::{preprocess_records, synthesize_windows, Preprocessed};
pub use config::{ConfigError, ExperimentConfig, ModelChoice};
pub use experiment::{build_pool, compute_features, read_report, run_experiment, write_report, Pool, FAILURE_MARKER};
pub use folds::{make_folds, select_samples, FoldError, FoldPlan};
pub use metrics::{aggregate, mean_sd, metrics_from_confusion, ConfusionMatrix, MetricsError, MetricsRow};
pub use report::{five_number_summary, render_report, FiveNumber, FoldRow, ModelReport, RenderedReport, ReportError, ReportTable};
pub use stats::{ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_cdf, StatsError, TTest};

use crate::dsp::{DspError, StoreError};
use crate::hrv::HrvError;
use crate::signal_io::{AnnotationError, CohortFileError, EdfError, SynthError};
use crate::svm::SvmError;
use osa_nn::NnError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Edf(#[from] EdfError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Cohort(#[from] CohortFileError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Features(#[from] HrvError),
    #[error("svm: {0}")]
    Svm(#[from] SvmError),
    #[error("network: {0}")]
    Nn(#[from] NnError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => EXIT_USAGE,
            HarnessError::Synth(_) => EXIT_USAGE,
            HarnessError::Nn(NnError::InvalidConfig(_)) => EXIT_USAGE,
            HarnessError::Svm(SvmError::InvalidParameter(_)) => EXIT_USAGE,
            HarnessError::Nn(NnError::NonFiniteLoss { .. }) => EXIT_NUMERIC,
            HarnessError::Stats(_) => EXIT_NUMERIC,
            HarnessError::Svm(SvmError::SingleClassData | SvmError::EmptyFeatureSpace) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        }
    }
}
