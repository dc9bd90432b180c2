//! Standardized-feature SVM baseline.
//!
//! Defaults: RBF kernel with `gamma = 1 / (d * mean feature variance)`
//! (that is `1/d` on standardized data), `C = 1`, KKT tolerance `1e-3`.

mod smo;
mod standardize;

use serde::{Deserialize, Serialize};
use std::path::Path;

pub use smo::{class_sign, svm_train, Kernel, KernelSpec, SvmModel, SvmParams};
pub use standardize::Standardizer;

use crate::signal_io::Class;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SvmError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("every feature has zero variance")]
    EmptyFeatureSpace,
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("non-finite feature {feature} in row {row}")]
    NonFiniteFeature { row: usize, feature: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    Serialization(String),
}

/// Standardizer plus kernel machine, operating on raw feature vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmClassifier {
    pub version: u32,
    pub standardizer: Standardizer,
    pub model: SvmModel,
}

impl SvmClassifier {
    pub fn fit(x: &[Vec<f64>], y: &[Class], params: &SvmParams) -> Result<Self, SvmError> {
        let standardizer = Standardizer::fit(x)?;
        let z = x.iter().map(|r| standardizer.apply(r)).collect::<Result<Vec<_>, _>>()?;
        let model = svm_train(&z, y, params)?;
        Ok(SvmClassifier { version: MODEL_FORMAT_VERSION, standardizer, model })
    }

    pub fn predict(&self, v: &[f64]) -> Result<(Class, f64), SvmError> {
        self.model.predict(&self.standardizer.apply(v)?)
    }

    pub fn to_json(&self) -> Result<String, SvmError> {
        serde_json::to_string_pretty(self).map_err(|e| SvmError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, SvmError> {
        let m: SvmClassifier = serde_json::from_str(s).map_err(|e| SvmError::Serialization(e.to_string()))?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(SvmError::Serialization(format!("unsupported model version {}", m.version)));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), SvmError> {
        std::fs::write(path, self.to_json()?).map_err(|e| SvmError::Serialization(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SvmError> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| SvmError::Serialization(e.to_string()))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_version_check() {
        let x = vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![3.0, 5.0], vec![4.0, 5.0]];
        let y = [Class::Normal, Class::Normal, Class::Severe, Class::Severe];
        let m = SvmClassifier::fit(&x, &y, &SvmParams::default()).unwrap();
        assert_eq!(m.standardizer.kept, vec![0]);
        let back = SvmClassifier::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for (v, c) in x.iter().zip(y) {
            assert_eq!(back.predict(v).unwrap().0, c);
        }
        let bumped = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(SvmClassifier::from_json(&bumped).is_err());
    }
}
