use rand::{Rng, RngExt};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Inverted-dropout mask: each entry is `0` or `1 / (1 - rate)`.
/// Returns `None` when `rate == 0` (nothing to drop).
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Option<Vec<T>> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    let scale = T::lit(1.0 / keep);
    Some((0..len).map(|_| if rng.random::<f64>() < keep { scale } else { T::zero() }).collect())
}

/// Train mode with `Some(rng)`, identity otherwise. Returns the mask used.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    x: &Tensor<T>,
    rate: f64,
    rng: Option<&mut R>,
) -> (Tensor<T>, Option<Vec<T>>) {
    let Some(rng) = rng else {
        return (x.clone(), None);
    };
    match dropout_mask::<T, R>(x.len(), rate, rng) {
        None => (x.clone(), None),
        Some(mask) => {
            let mut y = x.clone();
            for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
                *v *= m;
            }
            (y, Some(mask))
        }
    }
}

pub fn dropout_backward<T: Scalar>(dy: &Tensor<T>, mask: Option<&[T]>) -> Result<Tensor<T>> {
    let mut dx = dy.clone();
    if let Some(mask) = mask {
        for (d, &m) in dx.data_mut().iter_mut().zip(mask) {
            *d *= m;
        }
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_and_infer_are_identity() {
        let x = Tensor::from_vec(&[4], vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(dropout(&x, 0.0, Some(&mut rng)).0, x);
        assert_eq!(dropout::<f64, ChaCha8Rng>(&x, 0.4, None).0, x);
    }

    #[test]
    fn keeps_expected_fraction_and_mean() {
        let n = 40_000;
        let x = Tensor::full(&[n], 1.0f64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (y, _) = dropout(&x, 0.4, Some(&mut rng));
        let kept = y.data().iter().filter(|&&v| v != 0.0).count() as f64 / n as f64;
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((kept - 0.6).abs() <= 0.03, "kept {kept}");
        assert!((mean - 1.0).abs() <= 0.05, "mean {mean}");
    }
}
