//! RR and EDR series and the time-domain RR statistics.

use serde::{Deserialize, Serialize};

use super::peaks::RPeakSeries;
use super::HrvError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrSeries {
    /// Milliseconds.
    pub intervals: Vec<f64>,
    /// Seconds, midpoint of each interval.
    pub times: Vec<f64>,
}

/// R-amplitude respiration surrogate at the (uneven) peak times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdrSeries {
    pub values: Vec<f64>,
    pub times: Vec<f64>,
}

pub fn compute_rr(peaks: &RPeakSeries) -> Result<RrSeries, HrvError> {
    if peaks.times.len() < 2 {
        return Err(HrvError::TooFewPeaks(peaks.times.len()));
    }
    let (intervals, times) = peaks.times.windows(2).map(|w| ((w[1] - w[0]) * 1000.0, (w[0] + w[1]) / 2.0)).unzip();
    Ok(RrSeries { intervals, times })
}

pub fn compute_edr(peaks: &RPeakSeries) -> Result<EdrSeries, HrvError> {
    if peaks.amplitudes.len() < 2 {
        return Err(HrvError::TooFewPeaks(peaks.amplitudes.len()));
    }
    let mean = peaks.amplitudes.iter().sum::<f64>() / peaks.amplitudes.len() as f64;
    Ok(EdrSeries { values: peaks.amplitudes.iter().map(|a| a - mean).collect(), times: peaks.times.clone() })
}

pub fn mean_rr(rr: &[f64]) -> Result<f64, HrvError> {
    if rr.is_empty() {
        return Err(HrvError::EmptySeries);
    }
    Ok(rr.iter().sum::<f64>() / rr.len() as f64)
}

/// Lag-`lag` autocorrelation, normalised by the full-series sum of squares.
pub fn serial_correlation(x: &[f64], lag: usize) -> Result<f64, HrvError> {
    let n = x.len();
    if lag == 0 || n < lag + 2 {
        return Err(HrvError::TooShort { needed: lag + 2, got: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let den: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if den == 0.0 {
        return Err(HrvError::DegenerateSeries);
    }
    let num: f64 = (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum();
    Ok(num / den)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pnn50Mode {
    /// Only increases: `x[i+1] - x[i] > 50`.
    #[default]
    Increase,
    /// Either direction: `|x[i+1] - x[i]| > 50`.
    Absolute,
}

/// Number of adjacent interval pairs differing by more than 50 ms.
pub fn pnn50(x: &[f64], mode: Pnn50Mode) -> Result<usize, HrvError> {
    if x.len() < 2 {
        return Err(HrvError::TooShort { needed: 2, got: x.len() });
    }
    Ok(x.windows(2)
        .filter(|w| {
            let d = w[1] - w[0];
            match mode {
                Pnn50Mode::Increase => d > 50.0,
                Pnn50Mode::Absolute => d.abs() > 50.0,
            }
        })
        .count())
}

/// Sample SD of successive differences.
pub fn sdsd(x: &[f64]) -> Result<f64, HrvError> {
    if x.len() < 3 {
        return Err(HrvError::TooShort { needed: 3, got: x.len() });
    }
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.iter().sum::<f64>() / d.len() as f64;
    Ok((d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (d.len() - 1) as f64).sqrt())
}
