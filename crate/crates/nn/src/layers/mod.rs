//! Layer kernels as free functions: each forward has a matching backward
//! that consumes the forward's inputs or cache.

pub mod activation;
pub mod batch_norm;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod lstm;
pub mod pool;

pub use activation::{relu, relu_backward, tanh_act, tanh_backward};
pub use batch_norm::{batch_norm_backward, batch_norm_infer, batch_norm_train, BatchNormCache, BatchStats};
pub use conv::{conv1d, conv1d_backward, conv_output_len, Conv1dGrads};
pub use dense::{dense, dense_backward};
pub use dropout::{dropout, dropout_backward, dropout_mask};
pub use loss::{softmax, softmax_cross_entropy};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmParams};
pub use pool::{max_pool1d, max_pool1d_backward, PoolIndices};
