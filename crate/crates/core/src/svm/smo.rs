//! C-SVC dual solved by SMO with second-order working-set selection.
//!
//! The problem is `min 1/2 a'Qa - e'a` subject to `0 <= a <= C` and
//! `y'a = 0`, with `Q_ij = y_i y_j K(x_i, x_j)`. The full kernel matrix is
//! kept in memory. Samples are first put in a canonical order and then
//! shuffled by the seed, so the result does not depend on input order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::standardize::check_rows;
use super::SvmError;
use crate::signal_io::Class;

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => (-gamma * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).exp(),
        }
    }
}

/// Kernel choice before the data is seen; `Rbf { gamma: None }` resolves to
/// `1 / (d * mean feature variance)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { kernel: KernelSpec::Rbf { gamma: None }, c: 1.0, tol: 1e-3, seed: 0, max_iter: 10_000_000 }
    }
}

pub fn class_sign(c: Class) -> f64 {
    match c {
        Class::Normal => -1.0,
        Class::Severe => 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision_value(&self, v: &[f64]) -> Result<f64, SvmError> {
        if v.len() != self.dim() {
            return Err(SvmError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, c)| c * self.kernel.eval(sv, v)).sum::<f64>() + self.bias)
    }

    /// Severe when the decision value is positive.
    pub fn predict(&self, v: &[f64]) -> Result<(Class, f64), SvmError> {
        let f = self.decision_value(v)?;
        Ok((if f > 0.0 { Class::Severe } else { Class::Normal }, f))
    }

    /// Dual objective `1/2 a'Qa - sum(a)` at the solution.
    pub fn objective(&self) -> f64 {
        let mut quad = 0.0;
        for (i, a) in self.support_vectors.iter().enumerate() {
            for (j, b) in self.support_vectors.iter().enumerate() {
                quad += self.dual_coef[i] * self.dual_coef[j] * self.kernel.eval(a, b);
            }
        }
        0.5 * quad - self.dual_coef.iter().map(|c| c.abs()).sum::<f64>()
    }
}

fn canonical_order(x: &[Vec<f64>], y: &[Class], seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        y[a].index().cmp(&y[b].index()).then_with(|| {
            x[a].iter().zip(&x[b]).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

fn resolve_kernel(spec: KernelSpec, x: &[&[f64]]) -> Kernel {
    match spec {
        KernelSpec::Linear => Kernel::Linear,
        KernelSpec::Rbf { gamma: Some(gamma) } => Kernel::Rbf { gamma },
        KernelSpec::Rbf { gamma: None } => {
            let d = x[0].len();
            let n = x.len() as f64;
            let mean_var = (0..d)
                .map(|j| {
                    let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
                    x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
                })
                .sum::<f64>()
                / d as f64;
            let gamma = if mean_var > 0.0 { 1.0 / (d as f64 * mean_var) } else { 1.0 / d as f64 };
            Kernel::Rbf { gamma }
        }
    }
}

pub fn svm_train(x: &[Vec<f64>], y: &[Class], params: &SvmParams) -> Result<SvmModel, SvmError> {
    if x.is_empty() {
        return Err(SvmError::EmptyTrainingSet);
    }
    if y.len() != x.len() {
        return Err(SvmError::LabelCount { rows: x.len(), labels: y.len() });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(SvmError::EmptyFeatureSpace);
    }
    check_rows(x, d)?;
    if !Class::ALL.iter().all(|c| y.contains(c)) {
        return Err(SvmError::SingleClassData);
    }
    if !(params.c > 0.0 && params.c.is_finite() && params.tol > 0.0) {
        return Err(SvmError::InvalidParameter(format!("C {} tol {}", params.c, params.tol)));
    }
    let order = canonical_order(x, y, params.seed);
    let xs: Vec<&[f64]> = order.iter().map(|&i| x[i].as_slice()).collect();
    let kernel = resolve_kernel(params.kernel, &xs);
    if let Kernel::Rbf { gamma } = kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SvmError::InvalidParameter(format!("gamma {gamma}")));
        }
    }
    let ys: Vec<f64> = order.iter().map(|&i| class_sign(y[i])).collect();
    let n = xs.len();
    let c = params.c;

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(xs[i], xs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| ys[i] * ys[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yv: f64| (yv > 0.0 && a < c) || (yv < 0.0 && a > 0.0);
    let low = |a: f64, yv: f64| (yv > 0.0 && a > 0.0) || (yv < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        // i: maximal violating index from I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], ys[t]) && -ys[t] * grad[t] > gmax {
                gmax = -ys[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], ys[t]) {
                continue;
            }
            let v = -ys[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX {
                let b = gmax - v;
                if b > 0.0 {
                    let a = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                    let obj = -b * b / if a > 0.0 { a } else { TAU };
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax - gmin <= params.tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let (yi, yj) = (ys[i], ys[j]);
        let quad = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(TAU);
        // step along the feasible direction y_i e_i - y_j e_j, then clip
        let delta = (-yi * grad[i] + yj * grad[j]) / quad;
        let sum = yi * ai + yj * aj;
        let mut ni = ai + yi * delta;
        ni = ni.clamp(0.0, c);
        let mut nj = yj * (sum - yi * ni);
        if nj < 0.0 || nj > c {
            nj = nj.clamp(0.0, c);
            ni = yi * (sum - yj * nj);
            ni = ni.clamp(0.0, c);
        }
        let (di, dj) = (ni - ai, nj - aj);
        alpha[i] = ni;
        alpha[j] = nj;
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tol {}", params.tol);
    }

    // rho from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum_free += yg;
            n_free += 1;
        } else if (alpha[t] >= c && ys[t] < 0.0) || (alpha[t] <= 0.0 && ys[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let (support_vectors, dual_coef) =
        (0..n).filter(|&t| alpha[t] > 0.0).map(|t| (xs[t].to_vec(), alpha[t] * ys[t])).unzip();
    Ok(SvmModel { kernel, c, support_vectors, dual_coef, bias: -rho, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let x = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let y = [Class::Severe, Class::Normal];
        let p = SvmParams { kernel: KernelSpec::Linear, ..Default::default() };
        let m = svm_train(&x, &y, &p).unwrap();
        assert_eq!(m.predict(&x[0]).unwrap().0, Class::Severe);
        assert_eq!(m.predict(&x[1]).unwrap().0, Class::Normal);
        assert!(m.decision_value(&[0.0, 0.0]).unwrap().abs() < 1e-6);
    }

    #[test]
    fn xor_with_rbf() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = [Class::Normal, Class::Normal, Class::Severe, Class::Severe];
        let p = SvmParams { kernel: KernelSpec::Rbf { gamma: Some(1.0) }, c: 10.0, ..Default::default() };
        let m = svm_train(&x, &y, &p).unwrap();
        assert!(m.converged);
        for (v, c) in x.iter().zip(y) {
            assert_eq!(m.predict(v).unwrap().0, c);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = SvmParams::default();
        assert_eq!(svm_train(&[vec![1.0], vec![2.0]], &[Class::Normal; 2], &p), Err(SvmError::SingleClassData));
        assert!(matches!(
            svm_train(&[vec![1.0], vec![f64::INFINITY]], &[Class::Normal, Class::Severe], &p),
            Err(SvmError::NonFiniteFeature { row: 1, feature: 0 })
        ));
        let m = svm_train(&[vec![1.0], vec![2.0]], &[Class::Normal, Class::Severe], &p).unwrap();
        assert!(matches!(m.decision_value(&[1.0, 2.0]), Err(SvmError::DimensionMismatch { expected: 1, got: 2 })));
    }

    #[test]
    fn auto_gamma() {
        let x: [&[f64]; 2] = [&[0.0, 0.0], &[2.0, 4.0]];
        // variances 1 and 4, mean 2.5, d = 2
        assert_eq!(resolve_kernel(KernelSpec::Rbf { gamma: None }, &x), Kernel::Rbf { gamma: 0.2 });
    }
}
