use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Row-wise softmax of `[batch, classes]` logits, max-subtracted.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, classes) = logits.dims2("softmax")?;
    let mut p = logits.clone();
    for row in p.data_mut().chunks_exact_mut(classes) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v = *v / z);
    }
    Ok(p)
}

/// Mean categorical cross-entropy against class indices (the one-hot
/// positions) and its gradient `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (batch, classes) = logits.dims2("softmax_cross_entropy")?;
    if labels.len() != batch || labels.iter().any(|&l| l >= classes) {
        return shape_err("softmax_cross_entropy", format!("{} labels for batch {batch} x {classes} classes", labels.len()));
    }
    let mut grad = softmax(logits)?;
    let mut loss = T::zero();
    let inv_b = T::one() / T::lit(batch as f64);
    for ((row, logit_row), &label) in grad.data_mut().chunks_exact_mut(classes).zip(logits.data().chunks_exact(classes)).zip(labels) {
        // log-sum-exp form keeps saturated rows finite
        let m = logit_row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + logit_row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - logit_row[label];
        row[label] -= T::one();
        row.iter_mut().for_each(|v| *v *= inv_b);
    }
    Ok((loss * inv_b, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Tensor::from_vec(&[1, 2], vec![0.0, 0.0]).unwrap();
        let (loss, g) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(g.data(), &[-0.5, 0.5]);
    }

    #[test]
    fn saturated_correct_prediction() {
        let logits = Tensor::from_vec(&[1, 2], vec![100.0, -100.0]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!(loss <= 1e-6 && loss >= 0.0);
    }

    #[test]
    fn shift_invariant() {
        let a = Tensor::<f64>::from_vec(&[2, 2], vec![0.3, -1.2, 2.0, 0.1]).unwrap();
        let b = a.map(|v| v + 17.5);
        let (la, _) = softmax_cross_entropy(&a, &[1, 0]).unwrap();
        let (lb, _) = softmax_cross_entropy(&b, &[1, 0]).unwrap();
        assert!((la - lb).abs() < 1e-12f64);
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::<f64>::zeros(&[1, 2]);
        assert!(softmax_cross_entropy(&logits, &[2]).is_err());
    }
}
