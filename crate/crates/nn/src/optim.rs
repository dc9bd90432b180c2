use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// RMSProp: `v <- rho*v + (1-rho)*g^2`, `theta <- theta - lr*g/(sqrt(v) + eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self { learning_rate: 1e-3, rho: 0.9, epsilon: 1e-7 }
    }
}

/// One squared-gradient accumulator per parameter tensor.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub accumulators: Vec<Tensor<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn for_params<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        Self { accumulators: params.into_iter().map(|p| Tensor::zeros(p.shape())).collect() }
    }
}

impl RmsProp {
    pub fn step<T: Scalar>(&self, param: &mut Tensor<T>, grad: &Tensor<T>, acc: &mut Tensor<T>) -> Result<()> {
        if param.shape() != grad.shape() || param.shape() != acc.shape() {
            return shape_err("rmsprop_step", format!("param {:?}, grad {:?}, state {:?}", param.shape(), grad.shape(), acc.shape()));
        }
        let rho = T::lit(self.rho);
        let one_m = T::lit(1.0 - self.rho);
        let lr = T::lit(self.learning_rate);
        let eps = T::lit(self.epsilon);
        for ((p, &g), v) in param.data_mut().iter_mut().zip(grad.data()).zip(acc.data_mut()) {
            *v = rho * *v + one_m * g * g;
            *p -= lr * g / (v.sqrt() + eps);
        }
        Ok(())
    }

    /// Applies [`step`](Self::step) to every `(param, grad, accumulator)` triple.
    pub fn step_all<T: Scalar>(
        &self,
        params: Vec<&mut Tensor<T>>,
        grads: &[Tensor<T>],
        state: &mut OptimizerState<T>,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != state.accumulators.len() {
            return shape_err("rmsprop_step", "parameter / gradient count");
        }
        for ((p, g), v) in params.into_iter().zip(grads).zip(state.accumulators.iter_mut()) {
            self.step(p, g, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_by_hand() {
        let opt = RmsProp { learning_rate: 0.001, rho: 0.9, epsilon: 1e-7 };
        let mut theta = Tensor::zeros(&[1]);
        let mut v = Tensor::zeros(&[1]);
        opt.step(&mut theta, &Tensor::full(&[1], 1.0), &mut v).unwrap();
        assert!((v.data()[0] - 0.1f64).abs() < 1e-15);
        let want = -0.001 / (0.1f64.sqrt() + 1e-7);
        assert!((theta.data()[0] - want).abs() < 1e-15);
        assert!((theta.data()[0] + 0.003_162_27).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_only_decays_state() {
        let opt = RmsProp::default();
        let mut theta = Tensor::full(&[2], 0.7);
        let mut v = Tensor::full(&[2], 0.5);
        opt.step(&mut theta, &Tensor::zeros(&[2]), &mut v).unwrap();
        assert_eq!(theta.data(), &[0.7, 0.7]);
        assert!(v.data().iter().all(|&a| (a - 0.45f64).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch() {
        let opt = RmsProp::default();
        let mut theta = Tensor::<f64>::zeros(&[2]);
        let mut v = Tensor::zeros(&[2]);
        assert!(opt.step(&mut theta, &Tensor::zeros(&[3]), &mut v).is_err());
    }
}
