//! Event-window extraction: onset-aligned segment, z-score, keep the head.

use serde::{Deserialize, Serialize};

use super::filter::{apply_filter_with, design_butter_bandpass, design_notch, FilterMode};
use super::DspError;
use crate::signal_io::{Class, EventAnnotation, SubjectRecord};

/// `(x - mean) / sd` with the population SD.
pub fn zscore(x: &[f64]) -> Result<Vec<f64>, DspError> {
    if x.len() < 2 {
        return Err(DspError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(DspError::DegenerateWindow);
    }
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    /// Z-scored ECG, `window_seconds * sampling_rate` samples.
    pub samples: Vec<f64>,
    pub sampling_rate: f64,
    pub label: Class,
    pub subject_id: String,
    pub source_event: EventAnnotation,
}

impl EventWindow {
    /// `subject@event-start`, unique within a cohort.
    pub fn window_id(&self) -> String {
        format!("{}@{}", self.subject_id, self.source_event.start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub notch_hz: f64,
    pub notch_q: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_mode: FilterMode,
    pub min_event_seconds: f64,
    pub max_event_seconds: f64,
    /// Length of the segment that is z-scored.
    pub segment_seconds: f64,
    /// Leading part of the segment that is kept.
    pub window_seconds: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            notch_hz: 60.0,
            notch_q: 30.0,
            band_low_hz: 5.0,
            band_high_hz: 35.0,
            filter_mode: FilterMode::ZeroPhase,
            min_event_seconds: 28.0,
            max_event_seconds: 32.0,
            segment_seconds: 30.0,
            window_seconds: 15.0,
        }
    }
}

/// Notch then bandpass, as configured.
pub fn filter_ecg(x: &[f64], sampling_rate: f64, cfg: &PreprocessConfig) -> Result<Vec<f64>, DspError> {
    let notch = design_notch(cfg.notch_hz, sampling_rate, cfg.notch_q)?;
    let band = design_butter_bandpass(cfg.band_low_hz, cfg.band_high_hz, sampling_rate)?;
    let y = apply_filter_with(&notch, x, cfg.filter_mode)?;
    apply_filter_with(&band, &y, cfg.filter_mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    DurationOutOfRange,
    InsufficientSignal,
    DegenerateWindow,
    ExcludedSubject,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extraction {
    pub windows: Vec<EventWindow>,
    pub skipped: Vec<(EventAnnotation, SkipReason)>,
}

/// Windows for every qualifying event of an already filtered record.
pub fn extract_event_windows(record: &SubjectRecord, cfg: &PreprocessConfig) -> Extraction {
    let mut out = Extraction::default();
    let Some(label) = record.label.class() else {
        out.skipped = record.events.iter().map(|e| (e.clone(), SkipReason::ExcludedSubject)).collect();
        return out;
    };
    let fs = record.ecg.sampling_rate;
    let x = &record.ecg.samples;
    let seg = (cfg.segment_seconds * fs).round() as usize;
    let keep = (cfg.window_seconds * fs).round() as usize;
    for ev in &record.events {
        if !(cfg.min_event_seconds..=cfg.max_event_seconds).contains(&ev.duration) {
            out.skipped.push((ev.clone(), SkipReason::DurationOutOfRange));
            continue;
        }
        let start = (ev.start * fs).round() as usize;
        let Some(segment) = x.get(start..start + seg) else {
            out.skipped.push((ev.clone(), SkipReason::InsufficientSignal));
            continue;
        };
        match zscore(segment) {
            Ok(mut z) => {
                z.truncate(keep);
                out.windows.push(EventWindow {
                    samples: z,
                    sampling_rate: fs,
                    label,
                    subject_id: record.subject_id.clone(),
                    source_event: ev.clone(),
                });
            }
            Err(_) => out.skipped.push((ev.clone(), SkipReason::DegenerateWindow)),
        }
    }
    out
}

/// Filters the record's ECG, then extracts windows.
pub fn preprocess_record(record: &SubjectRecord, cfg: &PreprocessConfig) -> Result<Extraction, DspError> {
    let filtered = filter_ecg(&record.ecg.samples, record.ecg.sampling_rate, cfg)?;
    let mut r = record.clone();
    r.ecg.samples = filtered;
    Ok(extract_event_windows(&r, cfg))
}
