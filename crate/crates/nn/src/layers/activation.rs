use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// NaN passes through so that corrupt input surfaces in the loss.
pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v < T::zero() { T::zero() } else { v })
}

/// Subgradient 0 at `x == 0`.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
    dy.expect_shape("relu_backward", x.shape())?;
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(x.data()) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
    Ok(dx)
}

pub fn tanh_act<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| v.tanh())
}

/// Takes the forward *output* `y = tanh(x)`.
pub fn tanh_backward<T: Scalar>(y: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
    dy.expect_shape("tanh_backward", y.shape())?;
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        *d *= T::one() - v * v;
    }
    Ok(dx)
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::full(&[3], 1.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn tanh_is_odd() {
        let x = Tensor::from_vec(&[4], vec![0.0, 0.3, -1.7, 4.0]).unwrap();
        let y = tanh_act(&x);
        let yn = tanh_act(&x.map(|v| -v));
        assert_eq!(y.data()[0], 0.0);
        for (a, b) in y.data().iter().zip(yn.data()) {
            assert_eq!(*a, -*b);
        }
    }
}
