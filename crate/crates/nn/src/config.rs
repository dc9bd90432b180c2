//! Network hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::layers::conv_output_len;

/// Numeric precision used for training and inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f32" | "32" => Ok(Self::F32),
            "f64" | "64" => Ok(Self::F64),
            other => Err(format!("unknown precision {other:?} (expected f32 or f64)")),
        }
    }
}

/// Layer sizes and training settings.
///
/// Defaults follow the published architecture where it is explicit (unit
/// counts, dropout 0.4, pool size 2, RMSProp at 0.001). Kernel sizes and
/// strides are not given there; the defaults decimate 512 Hz input enough
/// that a ten-fold run finishes on one CPU core.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_units: Vec<usize>,
    /// Kernel size per conv layer.
    pub conv_kernel: Vec<usize>,
    /// Stride per conv layer.
    pub conv_stride: Vec<usize>,
    pub pool: usize,
    pub lstm_units: Vec<usize>,
    pub recurrent_dropout: f64,
    /// Dropout applied to the output of every LSTM layer.
    pub inter_lstm_dropout: f64,
    pub dense_units: Vec<usize>,
    pub output_classes: usize,
    pub learning_rate: f64,
    pub rmsprop_rho: f64,
    pub rmsprop_epsilon: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv_units: vec![256, 128, 64],
            conv_kernel: vec![16, 8, 8],
            conv_stride: vec![8, 4, 2],
            pool: 2,
            lstm_units: vec![128, 128, 64],
            recurrent_dropout: 0.4,
            inter_lstm_dropout: 0.4,
            dense_units: vec![128, 64, 32, 16, 8, 4],
            output_classes: 2,
            learning_rate: 1e-3,
            rmsprop_rho: 0.9,
            rmsprop_epsilon: 1e-7,
            bn_momentum: 0.9,
            bn_epsilon: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            precision: Precision::F64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        let n = self.conv_units.len();
        if n == 0 || self.lstm_units.is_empty() {
            return bad("need at least one conv and one LSTM layer".into());
        }
        if self.conv_kernel.len() != n || self.conv_stride.len() != n {
            return bad(format!("{n} conv layers but {} kernels / {} strides", self.conv_kernel.len(), self.conv_stride.len()));
        }
        let all_units = self.conv_units.iter().chain(&self.lstm_units).chain(&self.dense_units);
        if all_units.chain(&self.conv_kernel).chain(&self.conv_stride).any(|&u| u == 0) {
            return bad("unit counts, kernels and strides must be positive".into());
        }
        if self.pool == 0 || self.pool > 256 {
            return bad(format!("pool {} outside 1..=256", self.pool));
        }
        if self.output_classes < 2 {
            return bad("need at least two output classes".into());
        }
        for (name, r) in [("recurrent_dropout", self.recurrent_dropout), ("inter_lstm_dropout", self.inter_lstm_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name} = {r} outside [0, 1)"));
            }
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.rmsprop_rho) || !(self.rmsprop_epsilon > 0.0) {
            return bad("learning_rate > 0, rho in [0,1) and epsilon > 0 required".into());
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || !(self.bn_epsilon > 0.0) {
            return bad("bn_momentum in [0,1) and bn_epsilon > 0 required".into());
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2 (batch norm)".into());
        }
        Ok(())
    }

    /// Sequence length reaching the first LSTM for an input of `input_len`
    /// samples: per layer `t = floor((t - k) / s) + 1`, then `t = floor(t / pool)`.
    pub fn conv_stack_output_len(&self, input_len: usize) -> Option<usize> {
        let mut t = input_len;
        for (&k, &s) in self.conv_kernel.iter().zip(&self.conv_stride) {
            t = conv_output_len(t, k, s)?;
            if t < self.pool {
                return None;
            }
            t /= self.pool;
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_reach_the_lstm() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        // 7680 -> 959 -> 479 -> 118 -> 59 -> 26 -> 13
        assert_eq!(cfg.conv_stack_output_len(7680), Some(13));
        assert_eq!(cfg.conv_stack_output_len(64), None);
    }

    #[test]
    fn rejects_bad_dropout() {
        let cfg = ModelConfig { recurrent_dropout: 1.0, ..ModelConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn precision_parses() {
        assert_eq!("F32".parse::<Precision>().unwrap(), Precision::F32);
        assert!("f16".parse::<Precision>().is_err());
    }
}
