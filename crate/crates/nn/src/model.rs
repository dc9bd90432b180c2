//! The sequence classifier: conv blocks (conv, batch norm, ReLU, max pool),
//! stacked LSTMs, a tanh dense stack and a linear head feeding softmax.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::error::{shape_err, Result};
use crate::layers::batch_norm::{batch_norm_backward, batch_norm_infer, batch_norm_train, BatchNormCache};
use crate::layers::conv::{conv1d, conv1d_backward_impl};
use crate::layers::{
    dense, dense_backward, dropout_backward, dropout_mask, lstm_backward, lstm_forward, max_pool1d,
    max_pool1d_backward, relu, relu_backward, softmax, tanh_act, tanh_backward, LstmCache, LstmParams, PoolIndices,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvBlock<T> {
    /// `[kernel, in_channels, out_channels]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    /// `[in, out]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    config: ModelConfig,
    pub conv: Vec<ConvBlock<T>>,
    pub lstm: Vec<LstmParams<T>>,
    pub dense: Vec<DenseLayer<T>>,
    pub head: DenseLayer<T>,
}

struct ConvStep<T> {
    input: Tensor<T>,
    bn: BatchNormCache<T>,
    pre_relu: Tensor<T>,
    pool: PoolIndices,
}

struct LstmStep<T> {
    cache: LstmCache<T>,
    out_mask: Option<Vec<T>>,
}

struct DenseStep<T> {
    input: Tensor<T>,
    output: Tensor<T>,
}

/// Intermediate values from [`Model::forward_train`].
pub struct ForwardCache<T> {
    conv: Vec<ConvStep<T>>,
    lstm: Vec<LstmStep<T>>,
    lstm_time: usize,
    dense: Vec<DenseStep<T>>,
    head_input: Tensor<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Which branch every ReLU and max-pool window took. Two forward passes
    /// with equal signatures evaluate the same smooth piece of the network.
    pub fn routing_signature(&self) -> Vec<u8> {
        let mut sig = Vec::new();
        for step in &self.conv {
            sig.extend(step.pre_relu.data().iter().map(|&v| u8::from(v > T::zero())));
            sig.extend_from_slice(&step.pool.offsets);
        }
        sig
    }
}

fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, shape: &[usize], limit: f64) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::lit(rng.random_range(-limit..limit))).collect();
    Tensor::from_vec(shape, data).expect("shape product matches")
}

impl<T: Scalar> Model<T> {
    /// Seeded initialisation: fan-in scaled uniform weights, zero biases,
    /// forget-gate bias 1.
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut cin = 1;
        let mut conv = Vec::new();
        for ((&units, &k), &stride) in config.conv_units.iter().zip(&config.conv_kernel).zip(&config.conv_stride) {
            let fan_in = (k * cin) as f64;
            conv.push(ConvBlock {
                weight: uniform(&mut rng, &[k, cin, units], (6.0 / fan_in).sqrt()),
                bias: Tensor::zeros(&[units]),
                gamma: Tensor::full(&[units], T::one()),
                beta: Tensor::zeros(&[units]),
                running_mean: Tensor::zeros(&[units]),
                running_var: Tensor::full(&[units], T::one()),
                stride,
            });
            cin = units;
        }
        let mut inp = cin;
        let mut lstm = Vec::new();
        for &h in &config.lstm_units {
            let mut b = Tensor::zeros(&[4 * h]);
            b.data_mut()[h..2 * h].iter_mut().for_each(|v| *v = T::one());
            lstm.push(LstmParams {
                w: uniform(&mut rng, &[inp, 4 * h], (3.0 / inp as f64).sqrt()),
                u: uniform(&mut rng, &[h, 4 * h], (3.0 / h as f64).sqrt()),
                b,
            });
            inp = h;
        }
        let mut dense = Vec::new();
        for &out in &config.dense_units {
            dense.push(DenseLayer {
                weight: uniform(&mut rng, &[inp, out], (3.0 / inp as f64).sqrt()),
                bias: Tensor::zeros(&[out]),
            });
            inp = out;
        }
        let head = DenseLayer {
            weight: uniform(&mut rng, &[inp, config.output_classes], (3.0 / inp as f64).sqrt()),
            bias: Tensor::zeros(&[config.output_classes]),
        };
        Ok(Self { config: config.clone(), conv, lstm, dense, head })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Trainable tensors in a fixed order (shared by gradients, optimiser
    /// state and checkpoints).
    pub fn parameters(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for c in &self.conv {
            out.extend([&c.weight, &c.bias, &c.gamma, &c.beta]);
        }
        for l in &self.lstm {
            out.extend([&l.w, &l.u, &l.b]);
        }
        for d in self.dense.iter().chain(std::iter::once(&self.head)) {
            out.extend([&d.weight, &d.bias]);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for c in &mut self.conv {
            out.extend([&mut c.weight, &mut c.bias, &mut c.gamma, &mut c.beta]);
        }
        for l in &mut self.lstm {
            out.extend([&mut l.w, &mut l.u, &mut l.b]);
        }
        for d in self.dense.iter_mut().chain(std::iter::once(&mut self.head)) {
            out.extend([&mut d.weight, &mut d.bias]);
        }
        out
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.conv.len() {
            out.extend(["weight", "bias", "gamma", "beta"].map(|p| format!("conv{i}.{p}")));
        }
        for i in 0..self.lstm.len() {
            out.extend(["w", "u", "b"].map(|p| format!("lstm{i}.{p}")));
        }
        for i in 0..self.dense.len() {
            out.extend(["weight", "bias"].map(|p| format!("dense{i}.{p}")));
        }
        out.extend(["head.weight".to_string(), "head.bias".to_string()]);
        out
    }

    /// Train-mode pass: batch statistics (running statistics are updated),
    /// dropout masks drawn from `rng`.
    pub fn forward_train<R: Rng + ?Sized>(&mut self, x: &Tensor<T>, rng: &mut R) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let momentum = T::lit(self.config.bn_momentum);
        let eps = T::lit(self.config.bn_epsilon);
        let pool = self.config.pool;

        let mut h = x.clone();
        let mut conv_steps = Vec::with_capacity(self.conv.len());
        for block in &mut self.conv {
            let z = conv1d(&h, &block.weight, &block.bias, block.stride)?;
            let (bn_out, bn, stats) = batch_norm_train(&z, &block.gamma, &block.beta, eps)?;
            drop(z);
            for (r, &m) in block.running_mean.data_mut().iter_mut().zip(&stats.mean) {
                *r = momentum * *r + (T::one() - momentum) * m;
            }
            for (r, &v) in block.running_var.data_mut().iter_mut().zip(&stats.var) {
                *r = momentum * *r + (T::one() - momentum) * v;
            }
            let (pooled, idx) = max_pool1d(&relu(&bn_out), pool)?;
            conv_steps.push(ConvStep { input: std::mem::replace(&mut h, pooled), bn, pre_relu: bn_out, pool: idx });
        }

        let (batch, time, _) = h.dims3("model")?;
        let rd = self.config.recurrent_dropout;
        let od = self.config.inter_lstm_dropout;
        let n_lstm = self.lstm.len();
        let mut lstm_steps = Vec::with_capacity(n_lstm);
        let mut last = Tensor::zeros(&[0]);
        for (li, p) in self.lstm.iter().enumerate() {
            let units = p.units();
            let mask = dropout_mask::<T, R>(batch * units, rd, rng);
            let (seq, cache) = lstm_forward(&h, p, mask)?;
            if li + 1 < n_lstm {
                let out_mask = dropout_mask::<T, R>(seq.len(), od, rng);
                let mut next = seq;
                if let Some(m) = &out_mask {
                    next.data_mut().iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
                }
                h = next;
                lstm_steps.push(LstmStep { cache, out_mask });
            } else {
                // Only the final step feeds the dense stack, so dropout is
                // drawn for that step alone.
                let mut final_step = last_step(&seq)?;
                let out_mask = dropout_mask::<T, R>(final_step.len(), od, rng);
                if let Some(m) = &out_mask {
                    final_step.data_mut().iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
                }
                last = final_step;
                lstm_steps.push(LstmStep { cache, out_mask });
            }
        }

        let mut d = last;
        let mut dense_steps = Vec::with_capacity(self.dense.len());
        for layer in &self.dense {
            let y = tanh_act(&dense(&d, &layer.weight, &layer.bias)?);
            dense_steps.push(DenseStep { input: std::mem::replace(&mut d, y.clone()), output: y });
        }
        let logits = dense(&d, &self.head.weight, &self.head.bias)?;
        Ok((logits, ForwardCache { conv: conv_steps, lstm: lstm_steps, lstm_time: time, dense: dense_steps, head_input: d }))
    }

    /// Infer-mode pass: running statistics, no dropout. Returns logits.
    pub fn forward_infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let eps = T::lit(self.config.bn_epsilon);
        let mut h = x.clone();
        for block in &self.conv {
            let z = conv1d(&h, &block.weight, &block.bias, block.stride)?;
            let bn = batch_norm_infer(&z, &block.gamma, &block.beta, block.running_mean.data(), block.running_var.data(), eps)?;
            h = max_pool1d(&relu(&bn), self.config.pool)?.0;
        }
        for p in &self.lstm {
            h = lstm_forward(&h, p, None)?.0;
        }
        let mut d = last_step(&h)?;
        for layer in &self.dense {
            d = tanh_act(&dense(&d, &layer.weight, &layer.bias)?);
        }
        dense(&d, &self.head.weight, &self.head.bias)
    }

    /// Class probabilities `[batch, classes]` in infer mode.
    pub fn predict_proba(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        softmax(&self.forward_infer(x)?)
    }

    /// Gradients of the loss wrt every tensor in [`parameters`](Self::parameters),
    /// given `dlogits` from the loss.
    pub fn backward(&self, cache: &ForwardCache<T>, dlogits: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let (d_head_in, head_dw, head_db) = dense_backward(&cache.head_input, &self.head.weight, &self.head.bias, dlogits)?;
        let mut d_last = d_head_in;
        let mut dense_grads = Vec::with_capacity(self.dense.len());
        for (layer, step) in self.dense.iter().zip(&cache.dense).rev() {
            let dz = tanh_backward(&step.output, &d_last)?;
            let (dx, dw, db) = dense_backward(&step.input, &layer.weight, &layer.bias, &dz)?;
            dense_grads.push((dw, db));
            d_last = dx;
        }
        dense_grads.reverse();

        let n_lstm = self.lstm.len();
        let last_step_cache = &cache.lstm[n_lstm - 1];
        let d_last = dropout_backward(&d_last, last_step_cache.out_mask.as_deref())?;
        let (batch, units) = d_last.dims2("model backward")?;
        let time = cache.lstm_time;
        let mut dh_seq = Tensor::zeros(&[batch, time, units]);
        for b in 0..batch {
            let dst = ((b * time) + time - 1) * units;
            dh_seq.data_mut()[dst..dst + units].copy_from_slice(&d_last.data()[b * units..(b + 1) * units]);
        }
        let mut lstm_grads = Vec::with_capacity(n_lstm);
        for li in (0..n_lstm).rev() {
            let (dx, g) = lstm_backward(&self.lstm[li], &cache.lstm[li].cache, &dh_seq)?;
            lstm_grads.push(g);
            dh_seq = if li > 0 { dropout_backward(&dx, cache.lstm[li - 1].out_mask.as_deref())? } else { dx };
        }
        lstm_grads.reverse();

        let mut d = dh_seq;
        let mut conv_grads = Vec::with_capacity(self.conv.len());
        for (li, (block, step)) in self.conv.iter().zip(&cache.conv).enumerate().rev() {
            let d_relu = max_pool1d_backward(&d, &step.pool)?;
            let d_bn = relu_backward(&step.pre_relu, &d_relu)?;
            let (dz, dgamma, dbeta) = batch_norm_backward(&d_bn, &block.gamma, &step.bn)?;
            let g = conv1d_backward_impl(&step.input, &block.weight, &block.bias, block.stride, &dz, li > 0)?;
            conv_grads.push((g.dw, g.db, dgamma, dbeta));
            d = g.dx;
        }
        conv_grads.reverse();

        let mut grads = Vec::new();
        for (dw, db, dg, dbeta) in conv_grads {
            grads.extend([dw, db, dg, dbeta]);
        }
        for g in lstm_grads {
            grads.extend([g.dw, g.du, g.db]);
        }
        for (dw, db) in dense_grads {
            grads.extend([dw, db]);
        }
        grads.extend([head_dw, head_db]);
        Ok(grads)
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let (_, len, ch) = x.dims3("model input")?;
        if ch != 1 {
            return shape_err("model input", format!("expected 1 channel, got {ch}"));
        }
        if self.config.conv_stack_output_len(len).is_none() {
            return shape_err("model input", format!("length {len} too short for the conv stack"));
        }
        Ok(())
    }
}

fn last_step<T: Scalar>(seq: &Tensor<T>) -> Result<Tensor<T>> {
    let (batch, time, h) = seq.dims3("last_step")?;
    let mut out = Tensor::zeros(&[batch, h]);
    for b in 0..batch {
        let src = (b * time + time - 1) * h;
        out.data_mut()[b * h..(b + 1) * h].copy_from_slice(&seq.data()[src..src + h]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Precision;

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            conv_units: vec![4, 3, 2],
            conv_kernel: vec![3, 3, 2],
            conv_stride: vec![1, 1, 1],
            lstm_units: vec![3, 3, 2],
            dense_units: vec![4, 2],
            batch_size: 4,
            precision: Precision::F64,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn parameter_lists_line_up() {
        let m: Model<f64> = Model::new(&tiny_config()).unwrap();
        assert_eq!(m.parameters().len(), m.parameter_names().len());
        assert_eq!(m.parameters().len(), 3 * 4 + 3 * 3 + 2 * 2 + 2);
    }

    #[test]
    fn untrained_probabilities_sum_to_one() {
        let m: Model<f64> = Model::new(&tiny_config()).unwrap();
        let x = Tensor::from_vec(&[3, 64, 1], (0..192).map(|i| ((i as f64) * 0.37).sin()).collect()).unwrap();
        let p = m.predict_proba(&x).unwrap();
        assert_eq!(p.shape(), &[3, 2]);
        for row in p.data().chunks(2) {
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn short_input_is_a_shape_error() {
        let m: Model<f64> = Model::new(&tiny_config()).unwrap();
        assert!(m.forward_infer(&Tensor::zeros(&[1, 8, 1])).is_err());
    }
}
