//! ECG conditioning: mains notch, Butterworth bandpass, zero-phase
//! filtering, and extraction of z-scored event windows.

pub mod filter;
pub mod store;
pub mod window;

use thiserror::Error;

pub use filter::{apply_filter, apply_filter_with, design_butter_bandpass, design_notch, FilterMode, IirFilter, Sos};
pub use store::{read_window_store, write_window_store, StoreError};
pub use window::{
    extract_event_windows, filter_ecg, preprocess_record, zscore, EventWindow, Extraction, PreprocessConfig, SkipReason,
};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite input at sample {0}")]
    NonFiniteInput(usize),
    #[error("need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("window has zero variance")]
    DegenerateWindow,
}
