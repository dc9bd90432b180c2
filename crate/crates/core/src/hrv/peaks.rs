//! QRS detection in the Pan-Tompkins style: centred derivative, squaring,
//! 150 ms moving-window integration, adaptive signal/noise thresholds with
//! search-back, 200 ms refractory period. Each detection is then moved to
//! the ECG maximum within 50 ms and refined by parabolic interpolation.
//!
//! All thresholds are relative, so the detector is invariant to positive
//! rescaling of the input.

use serde::{Deserialize, Serialize};

use super::HrvError;

pub const MIN_PEAKS: usize = 5;
const INTEGRATION_S: f64 = 0.150;
const REFRACTORY_S: f64 = 0.200;
const REFINE_S: f64 = 0.050;
const LEARNING_S: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RPeakSeries {
    /// Seconds from the window start, strictly increasing.
    pub times: Vec<f64>,
    /// ECG value at each peak.
    pub amplitudes: Vec<f64>,
}

fn integrate(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let mut sq = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let d = (x[i + 1] - x[i - 1]) * fs / 2.0;
        sq[i] = d * d;
    }
    let half = ((INTEGRATION_S * fs).round() as usize / 2).max(1);
    let width = (2 * half + 1) as f64;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + sq[i];
    }
    (0..n).map(|i| (prefix[(i + half + 1).min(n)] - prefix[i.saturating_sub(half)]) / width).collect()
}

/// Indices of QRS complexes in the integrated signal.
fn classify(mwi: &[f64], fs: f64) -> Vec<usize> {
    let n = mwi.len();
    let refractory = (REFRACTORY_S * fs).round() as usize;
    let candidates: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| mwi[i] > 0.0 && mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])
        .collect();
    let learn = &mwi[..((LEARNING_S * fs) as usize).clamp(1, n)];
    let mut spki = learn.iter().cloned().fold(0.0, f64::max) / 3.0;
    let mut npki = learn.iter().sum::<f64>() / learn.len() as f64 / 2.0;

    let mut qrs: Vec<usize> = Vec::new();
    let mut noise: Vec<usize> = Vec::new();
    for &i in &candidates {
        let v = mwi[i];
        let thr1 = npki + 0.25 * (spki - npki);

        // search back for a missed beat once the gap exceeds 1.66 mean RR
        if qrs.len() >= 2 {
            let last = *qrs.last().expect("non-empty");
            let rrs: Vec<usize> = qrs.windows(2).rev().take(8).map(|w| w[1] - w[0]).collect();
            let rr_mean = rrs.iter().sum::<usize>() as f64 / rrs.len() as f64;
            if (i - last) as f64 > 1.66 * rr_mean {
                let thr2 = 0.5 * thr1;
                let missed = noise
                    .iter()
                    .copied()
                    .filter(|&j| j > last + refractory && j + refractory < i && mwi[j] > thr2)
                    .max_by(|&a, &b| mwi[a].total_cmp(&mwi[b]));
                if let Some(j) = missed {
                    qrs.push(j);
                    spki = 0.25 * mwi[j] + 0.75 * spki;
                }
            }
        }

        if v > thr1 {
            match qrs.last() {
                Some(&last) if i - last < refractory => {
                    if v > mwi[last] {
                        *qrs.last_mut().expect("non-empty") = i;
                        spki = 0.125 * v + 0.875 * spki;
                    }
                }
                _ => {
                    qrs.push(i);
                    spki = 0.125 * v + 0.875 * spki;
                }
            }
        } else {
            noise.push(i);
            npki = 0.125 * v + 0.875 * npki;
        }
    }
    qrs
}

/// Peak times and amplitudes of a filtered ECG window.
pub fn detect_r_peaks(x: &[f64], sampling_rate: f64) -> Result<RPeakSeries, HrvError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HrvError::NonFinite);
    }
    let n = x.len();
    let mwi = integrate(x, sampling_rate);
    let radius = (REFINE_S * sampling_rate).round() as usize;
    let refractory = REFRACTORY_S;

    let mut times: Vec<f64> = Vec::new();
    let mut amps: Vec<f64> = Vec::new();
    for i in classify(&mwi, sampling_rate) {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(n - 1);
        let j = (lo..=hi).fold(lo, |best, k| if x[k] > x[best] { k } else { best });
        let (mut t, mut a) = (j as f64, x[j]);
        if j > 0 && j + 1 < n {
            let (y0, y1, y2) = (x[j - 1], x[j], x[j + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            if denom < 0.0 {
                let off = 0.5 * (y0 - y2) / denom;
                t += off;
                a = y1 - 0.25 * (y0 - y2) * off;
            }
        }
        let t = t / sampling_rate;
        match times.last() {
            Some(&prev) if t - prev < refractory => {
                if a > *amps.last().expect("paired") {
                    *times.last_mut().expect("paired") = t;
                    *amps.last_mut().expect("paired") = a;
                }
            }
            _ => {
                times.push(t);
                amps.push(a);
            }
        }
    }
    if times.len() < MIN_PEAKS {
        return Err(HrvError::TooFewPeaks(times.len()));
    }
    Ok(RPeakSeries { times, amplitudes: amps })
}
