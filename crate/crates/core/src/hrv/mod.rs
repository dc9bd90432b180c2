//! R-peak detection, RR and EDR series, and the HRV/EDR feature vector.
//!
//! The EDR is the R-amplitude series, mean-removed and left on the uneven
//! beat times. Serial correlation is the autocorrelation of the RR
//! intervals themselves, not of their differences.

mod features;
mod peaks;
mod series;
mod spectrum;

pub use features::{
    extract_feature_vector, extract_features, read_feature_csv, write_feature_csv, FeatureConfig, FeatureRow,
    FeatureVector, FEATURE_NAMES,
};
pub use peaks::{detect_r_peaks, RPeakSeries, MIN_PEAKS};
pub use series::{compute_edr, compute_rr, mean_rr, pnn50, sdsd, serial_correlation, EdrSeries, Pnn50Mode, RrSeries};
pub use spectrum::{band_grid, band_powers, integrate_band, lomb_scargle_power, BandPowers, HF, LF, VLF};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HrvError {
    #[error("only {0} R peaks detected")]
    TooFewPeaks(usize),
    #[error("empty series")]
    EmptySeries,
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("periodogram has zero power in every band")]
    ZeroTotalPower,
    #[error("non-finite sample")]
    NonFinite,
    #[error("frequency must be positive, got {0}")]
    InvalidFrequency(f64),
    #[error("{times} times but {values} values")]
    LengthMismatch { times: usize, values: usize },
    #[error("feature table: {0}")]
    Table(String),
}
