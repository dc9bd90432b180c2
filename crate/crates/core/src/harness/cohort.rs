//! Turning subject records into the window pool.

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::dsp::{preprocess_record, EventWindow, SkipReason};
use crate::signal_io::{generate_cohort, EventAnnotation, SubjectRecord};

#[derive(Clone, Debug, Default)]
pub struct Preprocessed {
    pub windows: Vec<EventWindow>,
    /// `(subject_id, event, reason)`
    pub skipped: Vec<(String, EventAnnotation, SkipReason)>,
}

/// Filters and windows every record, in order. Subjects labelled
/// Excluded contribute only skip entries.
pub fn preprocess_records(records: &[SubjectRecord], cfg: &ExperimentConfig) -> Result<Preprocessed, HarnessError> {
    let mut out = Preprocessed::default();
    for r in records {
        let ext = preprocess_record(r, &cfg.preprocess)?;
        log::debug!("{}: {} windows, {} events skipped", r.subject_id, ext.windows.len(), ext.skipped.len());
        out.windows.extend(ext.windows);
        out.skipped.extend(ext.skipped.into_iter().map(|(e, why)| (r.subject_id.clone(), e, why)));
    }
    if out.windows.is_empty() {
        return Err(HarnessError::Data("no event windows survived preprocessing".into()));
    }
    Ok(out)
}

/// Generates the configured synthetic cohort and preprocesses it.
pub fn synthesize_windows(cfg: &ExperimentConfig) -> Result<Preprocessed, HarnessError> {
    let records = generate_cohort(&cfg.cohort, cfg.subjects_normal, cfg.subjects_severe, cfg.cohort_seed)?;
    preprocess_records(&records, cfg)
}
