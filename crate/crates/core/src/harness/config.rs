//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Lists are comma separated; ranges are `lo,hi`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

use osa_nn::{ModelConfig, Precision};

use crate::dsp::{FilterMode, PreprocessConfig};
use crate::hrv::{FeatureConfig, Pnn50Mode};
use crate::signal_io::{ClassProfile, CohortConfig};
use crate::svm::{KernelSpec, SvmParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: invalid value {value:?}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Svm,
    Dl,
    Both,
}

impl ModelChoice {
    pub fn svm(self) -> bool {
        matches!(self, ModelChoice::Svm | ModelChoice::Both)
    }

    pub fn dl(self) -> bool {
        matches!(self, ModelChoice::Dl | ModelChoice::Both)
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelChoice::Svm),
            "dl" => Ok(ModelChoice::Dl),
            "both" => Ok(ModelChoice::Both),
            o => Err(format!("expected svm, dl or both, got {o:?}")),
        }
    }
}

impl std::fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelChoice::Svm => "svm",
            ModelChoice::Dl => "dl",
            ModelChoice::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: ModelChoice,
    pub per_class: usize,
    pub folds: usize,
    pub selection_seed: u64,
    pub fold_seed: u64,
    pub svm_seed: u64,
    /// Fold `i` trains with `nn_seed + i`.
    pub nn_seed: u64,
    /// Synthetic cohort used when no windows are supplied.
    pub subjects_normal: usize,
    pub subjects_severe: usize,
    pub cohort_seed: u64,
    pub cohort: CohortConfig,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub svm: SvmParams,
    pub nn: ModelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: ModelChoice::Both,
            per_class: 1000,
            folds: 10,
            selection_seed: 0,
            fold_seed: 0,
            svm_seed: 0,
            nn_seed: 0,
            subjects_normal: 100,
            subjects_severe: 100,
            cohort_seed: 0,
            cohort: CohortConfig::default(),
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            svm: SvmParams::default(),
            nn: ModelConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_range(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    match parse_list::<f64>(key, value)?.as_slice() {
        &[lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err(ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: "expected lo,hi with lo <= hi".into() }),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn range((lo, hi): (f64, f64)) -> String {
    format!("{lo},{hi}")
}

const PROFILE_KEYS: [&str; 8] =
    ["ahi", "heart_rate", "hrv_lf_amplitude", "hrv_hf_amplitude", "resp_rate", "r_width", "s_amplitude", "t_amplitude"];

fn profile_field<'a>(p: &'a mut ClassProfile, name: &str) -> Option<&'a mut (f64, f64)> {
    Some(match name {
        "ahi" => &mut p.ahi,
        "heart_rate" => &mut p.heart_rate,
        "hrv_lf_amplitude" => &mut p.hrv_lf_amplitude,
        "hrv_hf_amplitude" => &mut p.hrv_hf_amplitude,
        "resp_rate" => &mut p.resp_rate,
        "r_width" => &mut p.r_width,
        "s_amplitude" => &mut p.s_amplitude,
        "t_amplitude" => &mut p.t_amplitude,
        _ => return None,
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Overrides fields from `text`, leaving unmentioned keys alone.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line: i + 1, key: key.into() });
            }
            if !self.set(key, value)? {
                return Err(ConfigError::UnknownKey { line: i + 1, key: key.into() });
            }
        }
        Ok(())
    }

    /// Sets every seed at once.
    pub fn set_seed(&mut self, seed: u64) {
        self.selection_seed = seed;
        self.fold_seed = seed;
        self.svm_seed = seed;
        self.nn_seed = seed;
        self.cohort_seed = seed;
    }

    /// Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<bool, ConfigError> {
        let p = &mut self.preprocess;
        let n = &mut self.nn;
        let c = &mut self.cohort;
        match key {
            "models" => self.models = parse(key, v)?,
            "per_class" => self.per_class = parse(key, v)?,
            "folds" => self.folds = parse(key, v)?,
            "selection_seed" => self.selection_seed = parse(key, v)?,
            "fold_seed" => self.fold_seed = parse(key, v)?,
            "svm_seed" => self.svm_seed = parse(key, v)?,
            "nn_seed" => self.nn_seed = parse(key, v)?,

            "synth_subjects_normal" => self.subjects_normal = parse(key, v)?,
            "synth_subjects_severe" => self.subjects_severe = parse(key, v)?,
            "synth_seed" => self.cohort_seed = parse(key, v)?,
            "synth_duration" => c.duration = parse(key, v)?,
            "synth_sampling_rate" => c.sampling_rate = parse(key, v)?,
            "synth_event_duration" => c.event_duration = parse_range(key, v)?,
            "synth_event_gap" => c.event_gap = parse_range(key, v)?,
            "synth_mains_amplitude" => c.mains_amplitude = parse_range(key, v)?,
            "synth_noise_sd" => c.noise_sd = parse_range(key, v)?,

            "notch_hz" => p.notch_hz = parse(key, v)?,
            "notch_q" => p.notch_q = parse(key, v)?,
            "band_low_hz" => p.band_low_hz = parse(key, v)?,
            "band_high_hz" => p.band_high_hz = parse(key, v)?,
            "filter_mode" => {
                p.filter_mode = match v {
                    "zero_phase" => FilterMode::ZeroPhase,
                    "forward" => FilterMode::Forward,
                    _ => return Err(invalid(key, v, "expected zero_phase or forward")),
                }
            }
            "min_event_seconds" => p.min_event_seconds = parse(key, v)?,
            "max_event_seconds" => p.max_event_seconds = parse(key, v)?,
            "segment_seconds" => p.segment_seconds = parse(key, v)?,
            "window_seconds" => p.window_seconds = parse(key, v)?,

            "pnn50_absolute" => {
                self.features.pnn50_mode = if parse::<bool>(key, v)? { Pnn50Mode::Absolute } else { Pnn50Mode::Increase }
            }

            "svm_kernel" => {
                let gamma = match self.svm.kernel {
                    KernelSpec::Rbf { gamma } => gamma,
                    KernelSpec::Linear => None,
                };
                self.svm.kernel = match v {
                    "rbf" => KernelSpec::Rbf { gamma },
                    "linear" => KernelSpec::Linear,
                    _ => return Err(invalid(key, v, "expected rbf or linear")),
                }
            }
            "svm_gamma" => {
                let g = if v == "auto" { None } else { Some(parse::<f64>(key, v)?) };
                match &mut self.svm.kernel {
                    KernelSpec::Rbf { gamma } => *gamma = g,
                    KernelSpec::Linear if g.is_none() => {}
                    KernelSpec::Linear => return Err(invalid(key, v, "gamma needs svm_kernel = rbf (set it first)")),
                }
            }
            "svm_c" => self.svm.c = parse(key, v)?,
            "svm_tol" => self.svm.tol = parse(key, v)?,
            "svm_max_iter" => self.svm.max_iter = parse(key, v)?,

            "conv_units" => n.conv_units = parse_list(key, v)?,
            "conv_kernel" => n.conv_kernel = parse_list(key, v)?,
            "conv_stride" => n.conv_stride = parse_list(key, v)?,
            "pool" => n.pool = parse(key, v)?,
            "lstm_units" => n.lstm_units = parse_list(key, v)?,
            "recurrent_dropout" => n.recurrent_dropout = parse(key, v)?,
            "inter_lstm_dropout" => n.inter_lstm_dropout = parse(key, v)?,
            "dense_units" => n.dense_units = parse_list(key, v)?,
            "learning_rate" => n.learning_rate = parse(key, v)?,
            "rmsprop_rho" => n.rmsprop_rho = parse(key, v)?,
            "rmsprop_epsilon" => n.rmsprop_epsilon = parse(key, v)?,
            "bn_momentum" => n.bn_momentum = parse(key, v)?,
            "bn_epsilon" => n.bn_epsilon = parse(key, v)?,
            "batch_size" => n.batch_size = parse(key, v)?,
            "max_epochs" => n.max_epochs = parse(key, v)?,
            "patience" => n.patience = parse(key, v)?,
            "precision" => n.precision = parse::<Precision>(key, v)?,
            _ => {
                let profile = key
                    .strip_prefix("normal_")
                    .map(|k| (&mut c.normal, k))
                    .or_else(|| key.strip_prefix("severe_").map(|k| (&mut c.severe, k)));
                match profile.and_then(|(p, k)| profile_field(p, k)) {
                    Some(field) => *field = parse_range(key, v)?,
                    None => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// Every key with its current value; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let p = &self.preprocess;
        let n = &self.nn;
        let c = &self.cohort;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").ok();
        };
        kv("models", self.models.to_string());
        kv("per_class", self.per_class.to_string());
        kv("folds", self.folds.to_string());
        kv("selection_seed", self.selection_seed.to_string());
        kv("fold_seed", self.fold_seed.to_string());
        kv("svm_seed", self.svm_seed.to_string());
        kv("nn_seed", self.nn_seed.to_string());
        kv("synth_subjects_normal", self.subjects_normal.to_string());
        kv("synth_subjects_severe", self.subjects_severe.to_string());
        kv("synth_seed", self.cohort_seed.to_string());
        kv("synth_duration", c.duration.to_string());
        kv("synth_sampling_rate", c.sampling_rate.to_string());
        kv("synth_event_duration", range(c.event_duration));
        kv("synth_event_gap", range(c.event_gap));
        kv("synth_mains_amplitude", range(c.mains_amplitude));
        kv("synth_noise_sd", range(c.noise_sd));
        for (prefix, prof) in [("normal", &c.normal), ("severe", &c.severe)] {
            let mut prof = prof.clone();
            for k in PROFILE_KEYS {
                kv(&format!("{prefix}_{k}"), range(*profile_field(&mut prof, k).expect("known profile key")));
            }
        }
        kv("notch_hz", p.notch_hz.to_string());
        kv("notch_q", p.notch_q.to_string());
        kv("band_low_hz", p.band_low_hz.to_string());
        kv("band_high_hz", p.band_high_hz.to_string());
        kv("filter_mode", match p.filter_mode {
            FilterMode::ZeroPhase => "zero_phase".into(),
            FilterMode::Forward => "forward".into(),
        });
        kv("min_event_seconds", p.min_event_seconds.to_string());
        kv("max_event_seconds", p.max_event_seconds.to_string());
        kv("segment_seconds", p.segment_seconds.to_string());
        kv("window_seconds", p.window_seconds.to_string());
        kv("pnn50_absolute", (self.features.pnn50_mode == Pnn50Mode::Absolute).to_string());
        match self.svm.kernel {
            KernelSpec::Linear => kv("svm_kernel", "linear".into()),
            KernelSpec::Rbf { gamma } => {
                kv("svm_kernel", "rbf".into());
                kv("svm_gamma", gamma.map_or("auto".into(), |g| g.to_string()));
            }
        }
        kv("svm_c", self.svm.c.to_string());
        kv("svm_tol", self.svm.tol.to_string());
        kv("svm_max_iter", self.svm.max_iter.to_string());
        kv("conv_units", join(&n.conv_units));
        kv("conv_kernel", join(&n.conv_kernel));
        kv("conv_stride", join(&n.conv_stride));
        kv("pool", n.pool.to_string());
        kv("lstm_units", join(&n.lstm_units));
        kv("recurrent_dropout", n.recurrent_dropout.to_string());
        kv("inter_lstm_dropout", n.inter_lstm_dropout.to_string());
        kv("dense_units", join(&n.dense_units));
        kv("learning_rate", n.learning_rate.to_string());
        kv("rmsprop_rho", n.rmsprop_rho.to_string());
        kv("rmsprop_epsilon", n.rmsprop_epsilon.to_string());
        kv("bn_momentum", n.bn_momentum.to_string());
        kv("bn_epsilon", n.bn_epsilon.to_string());
        kv("batch_size", n.batch_size.to_string());
        kv("max_epochs", n.max_epochs.to_string());
        kv("patience", n.patience.to_string());
        kv("precision", match n.precision {
            Precision::F32 => "f32".into(),
            Precision::F64 => "f64".into(),
        });
        out
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}
