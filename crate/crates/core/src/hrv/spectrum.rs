//! Lomb-Scargle periodogram and the VLF/LF/HF band powers.
//!
//! The VLF band (0.003 to 0.04 Hz) lies below the 1/15 Hz resolution of a
//! 15 s window. It is still integrated over its literal limits, so VLF
//! figures mostly capture leakage and slow trend.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::HrvError;

pub const VLF: (f64, f64) = (0.003, 0.04);
pub const LF: (f64, f64) = (0.04, 0.15);
pub const HF: (f64, f64) = (0.15, 0.4);
const GRID_START_MILLI: usize = 3;
const GRID_END_MILLI: usize = 400;

/// Fixed 0.003..=0.400 Hz grid with 0.001 Hz spacing.
pub fn band_grid() -> Vec<f64> {
    (GRID_START_MILLI..=GRID_END_MILLI).map(|m| m as f64 / 1000.0).collect()
}

/// Normalised Lomb-Scargle periodogram (divided by twice the sample variance).
pub fn lomb_scargle_power(times: &[f64], values: &[f64], freqs: &[f64]) -> Result<Vec<f64>, HrvError> {
    let n = times.len();
    if values.len() != n {
        return Err(HrvError::LengthMismatch { times: n, values: values.len() });
    }
    if n < 4 {
        return Err(HrvError::TooShort { needed: 4, got: n });
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(HrvError::NonFinite);
    }
    if let Some(&f) = freqs.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(HrvError::InvalidFrequency(f));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = y.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(HrvError::DegenerateSeries);
    }
    Ok(freqs
        .iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let (s2, c2) = times.iter().fold((0.0, 0.0), |(s, c), &t| (s + (2.0 * w * t).sin(), c + (2.0 * w * t).cos()));
            let tau = s2.atan2(c2) / (2.0 * w);
            let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&t, &v) in times.iter().zip(&y) {
                let (s, c) = (w * (t - tau)).sin_cos();
                yc += v * c;
                ys += v * s;
                cc += c * c;
                ss += s * s;
            }
            // near-zero frequencies leave the sine basis nearly empty
            let term = |num: f64, den: f64| if den > 1e-12 * n as f64 { num * num / den } else { 0.0 };
            (term(yc, cc) + term(ys, ss)) / (2.0 * var)
        })
        .collect())
}

/// Trapezoid integral of `power` over grid points with `lo <= f <= hi`.
pub fn integrate_band(freqs: &[f64], power: &[f64], lo: f64, hi: f64) -> f64 {
    let eps = 1e-9;
    freqs
        .windows(2)
        .zip(power.windows(2))
        .filter(|(f, _)| f[0] >= lo - eps && f[1] <= hi + eps)
        .map(|(f, p)| 0.5 * (p[0] + p[1]) * (f[1] - f[0]))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub vlf: f64,
    pub lf: f64,
    pub hf: f64,
    pub norm_vlf: f64,
    pub norm_lf: f64,
    pub norm_hf: f64,
    /// `+inf` when HF is zero.
    pub lf_hf_ratio: f64,
}

pub fn band_powers(times: &[f64], values: &[f64]) -> Result<BandPowers, HrvError> {
    let freqs = band_grid();
    let p = lomb_scargle_power(times, values, &freqs)?;
    let vlf = integrate_band(&freqs, &p, VLF.0, VLF.1);
    let lf = integrate_band(&freqs, &p, LF.0, LF.1);
    let hf = integrate_band(&freqs, &p, HF.0, HF.1);
    let total = vlf + lf + hf;
    if total <= 0.0 {
        return Err(HrvError::ZeroTotalPower);
    }
    Ok(BandPowers {
        vlf,
        lf,
        hf,
        norm_vlf: vlf / total,
        norm_lf: lf / total,
        norm_hf: hf / total,
        lf_hf_ratio: if hf > 0.0 { lf / hf } else { f64::INFINITY },
    })
}
