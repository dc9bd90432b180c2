use serde::{Deserialize, Serialize};

use super::SvmError;

/// Per-feature z-scoring fitted on training data. Features with zero
/// variance are dropped, so transformed vectors can be shorter than raw ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_dim: usize,
    /// Indices of the retained raw features.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    /// Population SD of each retained feature.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, SvmError> {
        let first = rows.first().ok_or(SvmError::EmptyTrainingSet)?;
        let d = first.len();
        check_rows(rows, d)?;
        let n = rows.len() as f64;
        let (mut kept, mut mean, mut sd) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..d {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let s = (rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n).sqrt();
            if s > 1e-12 * m.abs().max(1e-300) && s > 0.0 {
                kept.push(j);
                mean.push(m);
                sd.push(s);
            } else {
                log::warn!("dropping zero-variance feature {j}");
            }
        }
        if kept.is_empty() {
            return Err(SvmError::EmptyFeatureSpace);
        }
        Ok(Standardizer { input_dim: d, kept, mean, sd })
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, SvmError> {
        if v.len() != self.input_dim {
            return Err(SvmError::DimensionMismatch { expected: self.input_dim, got: v.len() });
        }
        Ok(self.kept.iter().zip(self.mean.iter().zip(&self.sd)).map(|(&j, (m, s))| (v[j] - m) / s).collect())
    }
}

pub(crate) fn check_rows(rows: &[Vec<f64>], d: usize) -> Result<(), SvmError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(SvmError::DimensionMismatch { expected: d, got: r.len() });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteFeature { row: i, feature: j });
        }
    }
    Ok(())
}
