//! Mini-batch training with RMSProp and validation-loss early stopping.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{shape_err, NnError, Result};
use crate::layers::softmax_cross_entropy;
use crate::model::Model;
use crate::optim::{OptimizerState, RmsProp};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One labelled input sequence (single channel).
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub input: &'a [f64],
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the lowest validation loss (the last
    /// epoch when there is no validation set).
    pub model: Model<T>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Stacks equal-length sequences into `[batch, len, 1]`.
pub fn make_batch<T: Scalar>(inputs: &[&[f64]]) -> Result<Tensor<T>> {
    let Some(first) = inputs.first() else {
        return shape_err("make_batch", "empty batch");
    };
    let len = first.len();
    let mut data = Vec::with_capacity(inputs.len() * len);
    for x in inputs {
        if x.len() != len {
            return shape_err("make_batch", format!("sequence lengths {len} and {}", x.len()));
        }
        data.extend(x.iter().map(|&v| T::lit(v)));
    }
    Tensor::from_vec(&[inputs.len(), len, 1], data)
}

/// Seeded training run. Streams of the config seed: 0 initialisation,
/// 1 shuffling, 2 dropout.
pub fn train<T: Scalar>(cfg: &ModelConfig, train: &[Example<'_>], val: &[Example<'_>]) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if train.len() < 2 {
        return Err(NnError::InvalidConfig(format!("need at least 2 training examples, got {}", train.len())));
    }
    let mut model = Model::<T>::new(cfg)?;
    let opt = RmsProp { learning_rate: cfg.learning_rate, rho: cfg.rmsprop_rho, epsilon: cfg.rmsprop_epsilon };
    let mut state = OptimizerState::for_params(model.parameters());

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(2);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Model<T>)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // batch norm needs two samples; a lone straggler is skipped
            if chunk.len() < 2 {
                continue;
            }
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| train[i].input).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train[i].label).collect();
            let x = make_batch::<T>(&inputs)?;
            let (logits, cache) = model.forward_train(&x, &mut dropout_rng)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &labels)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    detail: format!("loss {loss}; logits finite: {}", logits.all_finite()),
                });
            }
            let grads = model.backward(&cache, &dlogits)?;
            drop(cache);
            opt.step_all(model.parameters_mut(), &grads, &mut state)?;
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = loss_sum / seen.max(1) as f64;
        let eval = if val.is_empty() { None } else { Some(evaluate(&model, val, cfg.batch_size)?) };
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss: eval.map_or(f64::NAN, |e| e.loss),
            val_acc: eval.map_or(f64::NAN, |e| e.accuracy),
        };
        log::info!(
            "epoch {epoch}: train_loss {:.4} val_loss {:.4} val_acc {:.4}",
            record.train_loss,
            record.val_loss,
            record.val_acc
        );
        history.push(record);

        let Some(eval) = eval else {
            continue;
        };
        if !eval.loss.is_finite() {
            return Err(NnError::NonFiniteLoss { epoch, batch: usize::MAX, detail: "validation loss".into() });
        }
        if best.as_ref().is_none_or(|(l, _, _)| eval.loss < *l) {
            best = Some((eval.loss, epoch, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, history.len()),
    };
    Ok(TrainOutcome { model, history, best_epoch })
}

/// Mean cross-entropy and accuracy in infer mode.
pub fn evaluate<T: Scalar>(model: &Model<T>, examples: &[Example<'_>], batch_size: usize) -> Result<Evaluation> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in examples.chunks(batch_size.max(1)) {
        let inputs: Vec<&[f64]> = chunk.iter().map(|e| e.input).collect();
        let labels: Vec<usize> = chunk.iter().map(|e| e.label).collect();
        let logits = model.forward_infer(&make_batch::<T>(&inputs)?)?;
        let (l, _) = softmax_cross_entropy(&logits, &labels)?;
        loss += l.as_f64() * chunk.len() as f64;
        correct += argmax_rows(&logits).iter().zip(&labels).filter(|(p, l)| p == l).count();
    }
    let n = examples.len().max(1) as f64;
    Ok(Evaluation { loss: loss / n, accuracy: correct as f64 / n })
}

/// Class probabilities for each input, in infer mode.
pub fn predict<T: Scalar>(model: &Model<T>, inputs: &[&[f64]], batch_size: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch_size.max(1)) {
        let p = model.predict_proba(&make_batch::<T>(chunk)?)?;
        let classes = p.shape()[1];
        out.extend(p.data().chunks_exact(classes).map(|r| r.iter().map(|v| v.as_f64()).collect()));
    }
    Ok(out)
}

fn argmax_rows<T: Scalar>(logits: &Tensor<T>) -> Vec<usize> {
    let classes = logits.shape()[1];
    logits
        .data()
        .chunks_exact(classes)
        .map(|r| (0..classes).fold(0, |best, j| if r[j] > r[best] { j } else { best }))
        .collect()
}

/// `epoch,train_loss,val_loss,val_acc` rows.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,train_loss,val_loss,val_acc")?;
    for r in history {
        writeln!(w, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.val_acc)?;
    }
    Ok(())
}
