//! Recording I/O: EDF signals, scored-event XML, AHI labelling, and the
//! synthetic ECG cohort used in place of restricted PSG data.

pub mod annotations;
pub mod cohort_files;
pub mod edf;
pub mod manifest;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotations::{parse_annotations, write_annotations, AnnotationError, EventAnnotation, DEFAULT_EVENT_PATTERNS};
pub use cohort_files::{encode_subject_edf, load_subject, read_cohort_manifest, write_cohort, CohortFileError, MANIFEST_FILE};
pub use edf::{read_edf, write_edf, EdfError, EdfHeader, SignalSpec, SignalTrace};
pub use manifest::{read_manifest, write_manifest, ManifestEntry};
pub use synth::{generate_cohort, generate_synthetic_cohort, generate_synthetic_ecg, ClassProfile, CohortConfig, SynthConfig, SynthError, Wave};

/// Subject-level severity from the apnea-hypopnea index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Severe,
    Excluded,
}

/// The two classes that reach the classifiers. Severe is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Normal,
    Severe,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::Normal, Class::Severe];

    /// 0 for Normal, 1 for Severe.
    pub fn index(self) -> usize {
        match self {
            Class::Normal => 0,
            Class::Severe => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Class::Normal),
            1 => Some(Class::Severe),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Normal => "normal",
            Class::Severe => "severe",
        }
    }
}

impl std::str::FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Class::Normal),
            "severe" => Ok(Class::Severe),
            _ => Err(format!("unknown class {s:?}")),
        }
    }
}

impl Label {
    pub fn class(self) -> Option<Class> {
        match self {
            Label::Normal => Some(Class::Normal),
            Label::Severe => Some(Class::Severe),
            Label::Excluded => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("AHI must be a non-negative number, got {0}")]
    NegativeAhi(f64),
}

/// Normal for `2 <= ahi <= 5`, Severe for `ahi > 35`, otherwise Excluded.
pub fn label_subject(ahi: f64) -> Result<Label, LabelError> {
    if ahi.is_nan() || ahi < 0.0 {
        return Err(LabelError::NegativeAhi(ahi));
    }
    Ok(if (2.0..=5.0).contains(&ahi) {
        Label::Normal
    } else if ahi > 35.0 {
        Label::Severe
    } else {
        Label::Excluded
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub ecg: SignalTrace,
    pub events: Vec<EventAnnotation>,
    /// Events per hour.
    pub ahi: f64,
    pub label: Label,
    /// Ground-truth R-peak times in seconds; empty for recorded data.
    pub r_peaks: Vec<f64>,
}
