//! Per-channel batch normalisation over every axis except the last.

use crate::error::{shape_err, NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Values kept from a train-mode forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
}

/// Batch statistics observed in a train-mode pass (population variance).
#[derive(Clone, Debug)]
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

fn channels<T: Scalar>(x: &Tensor<T>, gamma: &Tensor<T>, beta: &Tensor<T>) -> Result<usize> {
    let Some(&c) = x.shape().last() else {
        return shape_err("batch_norm", "scalar input");
    };
    if gamma.shape() != [c] || beta.shape() != [c] {
        return shape_err("batch_norm", format!("gamma {:?} / beta {:?} for {c} channels", gamma.shape(), beta.shape()));
    }
    Ok(c)
}

/// Train mode: normalise with the statistics of this batch. The leading
/// axis is the batch and must hold at least two samples.
pub fn batch_norm_train<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<(Tensor<T>, BatchNormCache<T>, BatchStats<T>)> {
    let c = channels(x, gamma, beta)?;
    if x.shape()[0] < 2 {
        return Err(NnError::TinyBatch(x.shape()[0]));
    }
    let rows = x.len() / c;
    let n = T::lit(rows as f64);
    let mut mean = vec![T::zero(); c];
    for row in x.data().chunks_exact(c) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut var = vec![T::zero(); c];
    for row in x.data().chunks_exact(c) {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    var.iter_mut().for_each(|s| *s = *s / n);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();

    let mut x_hat = Tensor::zeros(x.shape());
    let mut y = Tensor::zeros(x.shape());
    for ((xr, hr), yr) in x
        .data()
        .chunks_exact(c)
        .zip(x_hat.data_mut().chunks_exact_mut(c))
        .zip(y.data_mut().chunks_exact_mut(c))
    {
        for j in 0..c {
            let h = (xr[j] - mean[j]) * inv_std[j];
            hr[j] = h;
            yr[j] = gamma.data()[j] * h + beta.data()[j];
        }
    }
    Ok((y, BatchNormCache { x_hat, inv_std }, BatchStats { mean, var }))
}

/// Infer mode: normalise with externally supplied (running) statistics.
pub fn batch_norm_infer<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    mean: &[T],
    var: &[T],
    eps: T,
) -> Result<Tensor<T>> {
    let c = channels(x, gamma, beta)?;
    if mean.len() != c || var.len() != c {
        return shape_err("batch_norm_infer", "running statistics length");
    }
    let scale: Vec<T> = (0..c).map(|j| gamma.data()[j] / (var[j] + eps).sqrt()).collect();
    let shift: Vec<T> = (0..c).map(|j| beta.data()[j] - mean[j] * scale[j]).collect();
    let mut y = x.clone();
    for row in y.data_mut().chunks_exact_mut(c) {
        for j in 0..c {
            row[j] = row[j] * scale[j] + shift[j];
        }
    }
    Ok(y)
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn batch_norm_backward<T: Scalar>(
    dy: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &BatchNormCache<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    dy.expect_shape("batch_norm_backward", cache.x_hat.shape())?;
    let c = gamma.len();
    let rows = dy.len() / c;
    let n = T::lit(rows as f64);
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for (dr, hr) in dy.data().chunks_exact(c).zip(cache.x_hat.data().chunks_exact(c)) {
        for j in 0..c {
            dbeta.data_mut()[j] += dr[j];
            dgamma.data_mut()[j] += dr[j] * hr[j];
        }
    }
    // dx = gamma * inv_std / n * (n * dy - sum(dy) - x_hat * sum(dy * x_hat))
    let coef: Vec<T> = (0..c).map(|j| gamma.data()[j] * cache.inv_std[j] / n).collect();
    let mut dx = Tensor::zeros(dy.shape());
    for ((dr, hr), xr) in dy
        .data()
        .chunks_exact(c)
        .zip(cache.x_hat.data().chunks_exact(c))
        .zip(dx.data_mut().chunks_exact_mut(c))
    {
        for j in 0..c {
            xr[j] = coef[j] * (n * dr[j] - dbeta.data()[j] - hr[j] * dgamma.data()[j]);
        }
    }
    Ok((dx, dgamma, dbeta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_mode_standardises_each_channel() {
        let data: Vec<f64> = (0..24).map(|i| ((i * 7) % 11) as f64 * 0.3 + (i % 2) as f64).collect();
        let x = Tensor::from_vec(&[2, 6, 2], data).unwrap();
        let (y, _, _) = batch_norm_train(&x, &Tensor::full(&[2], 1.0), &Tensor::zeros(&[2]), 0.0).unwrap();
        for ch in 0..2 {
            let vals: Vec<f64> = y.data().iter().skip(ch).step_by(2).copied().collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-6 && (v - 1.0).abs() < 1e-6, "channel {ch}: mean {m} var {v}");
        }
    }

    #[test]
    fn zero_gamma_gives_beta() {
        let x = Tensor::from_vec(&[3, 2], vec![1.0, 2.0, 5.0, -1.0, 0.5, 9.0]).unwrap();
        let (y, _, _) = batch_norm_train(&x, &Tensor::zeros(&[2]), &Tensor::full(&[2], 5.0), 1e-3).unwrap();
        assert!(y.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn single_sample_batch_is_rejected() {
        let x = Tensor::<f64>::zeros(&[1, 4, 3]);
        let err = batch_norm_train(&x, &Tensor::full(&[3], 1.0), &Tensor::zeros(&[3]), 1e-3).unwrap_err();
        assert!(matches!(err, NnError::TinyBatch(1)));
    }
}
