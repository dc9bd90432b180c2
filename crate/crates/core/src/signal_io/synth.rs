//! Synthetic ECG: a train of PQRST templates, each the sum of five Gaussian
//! waves, with RR modulation at 0.1 Hz (LF) and at the respiratory rate
//! (HF), respiratory R-amplitude modulation, mains hum and white noise.
//!
//! Cohorts draw per-subject parameters from a class profile. The two default
//! profiles share heart-rate and respiration ranges, differ modestly in RR
//! modulation depth, and have disjoint QRS/T morphology, so the raw waveform
//! separates the classes far better than beat-timing features do.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{label_subject, EventAnnotation, Label, SignalTrace, SubjectRecord};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
}

/// One Gaussian wave of the beat template, relative to the R peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    /// Seconds from the R peak.
    pub offset: f64,
    /// Standard deviation in seconds.
    pub width: f64,
    /// mV
    pub amplitude: f64,
}

impl Wave {
    const fn new(offset: f64, width: f64, amplitude: f64) -> Self {
        Self { offset, width, amplitude }
    }
}

/// P, Q, R, S, T.
pub const DEFAULT_MORPHOLOGY: [Wave; 5] = [
    Wave::new(-0.20, 0.025, 0.12),
    Wave::new(-0.028, 0.008, -0.12),
    Wave::new(0.0, 0.009, 1.0),
    Wave::new(0.028, 0.009, -0.2),
    Wave::new(0.28, 0.045, 0.3),
];

/// Depth of the respiratory R-amplitude modulation.
const EDR_DEPTH: f64 = 0.15;
const LF_RATE: f64 = 0.1;
const MAINS_HZ: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub subject_id: String,
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    pub sampling_rate: f64,
    /// Beats per minute.
    pub heart_rate: f64,
    pub hrv_lf_amplitude: f64,
    pub hrv_hf_amplitude: f64,
    /// Hz
    pub resp_rate: f64,
    /// mV at 60 Hz.
    pub mains_amplitude: f64,
    /// mV
    pub noise_sd: f64,
    /// `(start, duration)` pairs in seconds.
    pub event_plan: Vec<(f64, f64)>,
    pub morphology: [Wave; 5],
    /// Stored with the record; labels it.
    pub ahi: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subject_id: "synthetic".into(),
            seed: 0,
            duration: 60.0,
            sampling_rate: 512.0,
            heart_rate: 60.0,
            hrv_lf_amplitude: 0.0,
            hrv_hf_amplitude: 0.0,
            resp_rate: 0.25,
            mains_amplitude: 0.0,
            noise_sd: 0.0,
            event_plan: Vec::new(),
            morphology: DEFAULT_MORPHOLOGY,
            ahi: 3.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(30.0..=200.0).contains(&self.heart_rate) {
            return bad(format!("heart rate {} outside [30, 200]", self.heart_rate));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {}", self.duration));
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return bad(format!("sampling rate {}", self.sampling_rate));
        }
        let depth = self.hrv_lf_amplitude.abs() + self.hrv_hf_amplitude.abs();
        if !depth.is_finite() || 60.0 / self.heart_rate * (1.0 - depth) < 0.3 {
            return bad(format!("RR modulation depth {depth} allows beats closer than 0.3 s"));
        }
        if !(self.resp_rate > 0.0 && self.resp_rate.is_finite()) {
            return bad(format!("resp rate {}", self.resp_rate));
        }
        if !(self.noise_sd >= 0.0 && self.mains_amplitude.is_finite()) {
            return bad("noise and mains amplitudes must be finite, noise non-negative".into());
        }
        if !(self.ahi >= 0.0) {
            return bad(format!("AHI {}", self.ahi));
        }
        if self.morphology.iter().any(|w| !(w.width > 0.0) || !w.offset.is_finite() || !w.amplitude.is_finite()) {
            return bad("wave widths must be positive".into());
        }
        for &(s, d) in &self.event_plan {
            if !(s >= 0.0 && d > 0.0 && s + d <= self.duration) {
                return bad(format!("event ({s}, {d}) outside the recording"));
            }
        }
        Ok(())
    }
}

/// Deterministic in `cfg` (seed included).
pub fn generate_synthetic_ecg(cfg: &SynthConfig) -> Result<SubjectRecord, SynthError> {
    cfg.validate()?;
    let label = label_subject(cfg.ahi).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fs = cfg.sampling_rate;
    let n = (cfg.duration * fs).round() as usize;
    let mut x = vec![0.0; n];

    let rr0 = 60.0 / cfg.heart_rate;
    let tau = std::f64::consts::TAU;
    let mut t = rng.random_range(0.1..0.1 + rr0);
    let mut r_peaks = Vec::new();
    while t < cfg.duration {
        r_peaks.push(t);
        let edr = 1.0 + EDR_DEPTH * (tau * cfg.resp_rate * t).sin();
        for (wi, w) in cfg.morphology.iter().enumerate() {
            let amp = if wi == 2 { w.amplitude * edr } else { w.amplitude };
            let centre = t + w.offset;
            let lo = (((centre - 5.0 * w.width) * fs).floor().max(0.0)) as usize;
            let hi = (((centre + 5.0 * w.width) * fs).ceil().max(0.0) as usize).min(n);
            for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
                let d = i as f64 / fs - centre;
                *v += amp * (-d * d / (2.0 * w.width * w.width)).exp();
            }
        }
        t += rr0
            * (1.0
                + cfg.hrv_lf_amplitude * (tau * LF_RATE * t).sin()
                + cfg.hrv_hf_amplitude * (tau * cfg.resp_rate * t).sin());
    }

    if cfg.mains_amplitude != 0.0 {
        let phase = rng.random_range(0.0..tau);
        for (i, v) in x.iter_mut().enumerate() {
            *v += cfg.mains_amplitude * (tau * MAINS_HZ * i as f64 / fs + phase).sin();
        }
    }
    if cfg.noise_sd > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sd).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        for v in x.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let events = cfg
        .event_plan
        .iter()
        .map(|&(start, duration)| EventAnnotation { name: "Obstructive apnea".into(), start, duration })
        .collect();
    Ok(SubjectRecord {
        subject_id: cfg.subject_id.clone(),
        ecg: SignalTrace { samples: x, sampling_rate: fs, label: "ECG".into() },
        events,
        ahi: cfg.ahi,
        label,
        r_peaks,
    })
}

/// Parameter ranges (uniform) for one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub ahi: (f64, f64),
    pub heart_rate: (f64, f64),
    pub hrv_lf_amplitude: (f64, f64),
    pub hrv_hf_amplitude: (f64, f64),
    pub resp_rate: (f64, f64),
    pub r_width: (f64, f64),
    pub s_amplitude: (f64, f64),
    pub t_amplitude: (f64, f64),
}

impl ClassProfile {
    pub fn normal() -> Self {
        Self {
            ahi: (2.0, 5.0),
            heart_rate: (55.0, 80.0),
            hrv_lf_amplitude: (0.01, 0.05),
            hrv_hf_amplitude: (0.01, 0.04),
            resp_rate: (0.2, 0.3),
            r_width: (0.008, 0.0095),
            s_amplitude: (-0.25, -0.15),
            t_amplitude: (0.25, 0.35),
        }
    }

    pub fn severe() -> Self {
        Self {
            ahi: (36.0, 80.0),
            heart_rate: (55.0, 80.0),
            hrv_lf_amplitude: (0.02, 0.06),
            hrv_hf_amplitude: (0.015, 0.045),
            resp_rate: (0.2, 0.3),
            r_width: (0.0105, 0.0125),
            s_amplitude: (-0.55, -0.4),
            t_amplitude: (0.12, 0.2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub duration: f64,
    pub sampling_rate: f64,
    /// Event lengths, seconds.
    pub event_duration: (f64, f64),
    /// Quiet time between consecutive events, seconds.
    pub event_gap: (f64, f64),
    pub mains_amplitude: (f64, f64),
    pub noise_sd: (f64, f64),
    pub normal: ClassProfile,
    pub severe: ClassProfile,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            duration: 600.0,
            sampling_rate: 512.0,
            event_duration: (28.0, 32.0),
            event_gap: (10.0, 40.0),
            mains_amplitude: (0.0, 0.1),
            noise_sd: (0.01, 0.04),
            normal: ClassProfile::normal(),
            severe: ClassProfile::severe(),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

impl CohortConfig {
    /// Parameters for subject `index` of `class`; subject streams are
    /// independent so any subject can be regenerated alone.
    pub fn subject_config(&self, severe: bool, index: usize, seed: u64) -> SynthConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((severe as u64) << 32) | index as u64);
        let p = if severe { &self.severe } else { &self.normal };
        let mut morphology = DEFAULT_MORPHOLOGY;
        morphology[2].width = draw(&mut rng, p.r_width);
        morphology[3].amplitude = draw(&mut rng, p.s_amplitude);
        morphology[4].amplitude = draw(&mut rng, p.t_amplitude);

        let mut event_plan = Vec::new();
        let mut t = draw(&mut rng, (5.0, 20.0));
        loop {
            let d = draw(&mut rng, self.event_duration);
            // keep 30 s of signal after every onset
            if t + d.max(30.0) > self.duration - 1.0 {
                break;
            }
            event_plan.push((t, d));
            t += d + draw(&mut rng, self.event_gap);
        }

        SynthConfig {
            subject_id: format!("{}{:04}", if severe { 'S' } else { 'N' }, index + 1),
            seed: rng.random(),
            duration: self.duration,
            sampling_rate: self.sampling_rate,
            heart_rate: draw(&mut rng, p.heart_rate),
            hrv_lf_amplitude: draw(&mut rng, p.hrv_lf_amplitude),
            hrv_hf_amplitude: draw(&mut rng, p.hrv_hf_amplitude),
            resp_rate: draw(&mut rng, p.resp_rate),
            mains_amplitude: draw(&mut rng, self.mains_amplitude),
            noise_sd: draw(&mut rng, self.noise_sd),
            event_plan,
            morphology,
            ahi: draw(&mut rng, p.ahi),
        }
    }

    pub fn subject_configs(&self, n_normal: usize, n_severe: usize, seed: u64) -> Vec<SynthConfig> {
        (0..n_normal)
            .map(|i| self.subject_config(false, i, seed))
            .chain((0..n_severe).map(|i| self.subject_config(true, i, seed)))
            .collect()
    }
}

pub fn generate_cohort(cfg: &CohortConfig, n_normal: usize, n_severe: usize, seed: u64) -> Result<Vec<SubjectRecord>, SynthError> {
    if n_normal == 0 || n_severe == 0 {
        return Err(SynthError::InvalidConfig("both classes need at least one subject".into()));
    }
    let records: Vec<SubjectRecord> = cfg
        .subject_configs(n_normal, n_severe, seed)
        .iter()
        .map(generate_synthetic_ecg)
        .collect::<Result<_, _>>()?;
    if let Some(r) = records.iter().find(|r| r.label == Label::Excluded) {
        return Err(SynthError::InvalidConfig(format!("profile AHI range excludes subject {}", r.subject_id)));
    }
    Ok(records)
}

/// [`generate_cohort`] with the default profiles.
pub fn generate_synthetic_cohort(n_normal: usize, n_severe: usize, seed: u64) -> Result<Vec<SubjectRecord>, SynthError> {
    generate_cohort(&CohortConfig::default(), n_normal, n_severe, seed)
}
