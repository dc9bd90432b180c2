//! A small CPU neural-network stack for single-channel sequence
//! classification: 1-D convolutions with batch norm, stacked LSTMs and a
//! dense head, trained with RMSProp.
//!
//! Every kernel is generic over [`Scalar`] so the same code runs in `f64`
//! (for gradient checks) or `f32` (for speed).

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use config::{ModelConfig, Precision};
pub use error::{NnError, Result};
pub use model::{ForwardCache, Model};
pub use optim::{OptimizerState, RmsProp};
pub use scalar::Scalar;
pub use tensor::Tensor;
pub use train::{evaluate, predict, train, write_history_csv, EpochRecord, Evaluation, Example, TrainOutcome};
