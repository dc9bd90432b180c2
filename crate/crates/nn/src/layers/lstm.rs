//! Single LSTM layer over `[batch, time, features]` with backpropagation
//! through time.
//!
//! Gate blocks in the fused `4*units` axis are ordered input, forget,
//! candidate, output. Recurrent dropout multiplies the hidden state entering
//! the recurrent transform by a mask drawn once per sequence.

use crate::error::{shape_err, Result};
use crate::layers::activation::sigmoid;
use crate::scalar::{gemm, MatMut, MatRef, Scalar};
use crate::tensor::Tensor;

/// Weights of one layer: `w: [in, 4H]`, `u: [H, 4H]`, `b: [4H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub w: Tensor<T>,
    pub u: Tensor<T>,
    pub b: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct LstmGrads<T> {
    pub dw: Tensor<T>,
    pub du: Tensor<T>,
    pub db: Tensor<T>,
}

/// Everything the backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    x: Tensor<T>,
    /// Activated gates `[B, T, 4H]`.
    gates: Vec<T>,
    /// Cell states `[B, T, H]`.
    cells: Vec<T>,
    tanh_cells: Vec<T>,
    /// Hidden outputs `[B, T, H]` (unmasked).
    hidden: Vec<T>,
    mask: Option<Vec<T>>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn units(&self) -> usize {
        self.u.shape()[0]
    }

    pub fn input_size(&self) -> usize {
        self.w.shape()[0]
    }

    fn check(&self) -> Result<(usize, usize)> {
        let (inp, g4) = self.w.dims2("lstm")?;
        let (h, ug4) = self.u.dims2("lstm")?;
        if g4 != 4 * h || ug4 != 4 * h || self.b.shape() != [4 * h] {
            return shape_err("lstm", format!("w {:?}, u {:?}, b {:?}", self.w.shape(), self.u.shape(), self.b.shape()));
        }
        Ok((inp, h))
    }
}

/// Runs the layer from zero initial state. `recurrent_mask`, when given, is
/// `[batch, units]` and multiplies `h_{t-1}` before the recurrent product.
pub fn lstm_forward<T: Scalar>(
    x: &Tensor<T>,
    p: &LstmParams<T>,
    recurrent_mask: Option<Vec<T>>,
) -> Result<(Tensor<T>, LstmCache<T>)> {
    let (inp, h) = p.check()?;
    let (batch, time, xin) = x.dims3("lstm")?;
    if xin != inp {
        return shape_err("lstm", format!("input has {xin} features, layer expects {inp}"));
    }
    if let Some(m) = &recurrent_mask {
        if m.len() != batch * h {
            return shape_err("lstm", "recurrent mask length");
        }
    }
    let g4 = 4 * h;
    let mut gates = vec![T::zero(); batch * time * g4];
    for row in gates.chunks_exact_mut(g4) {
        row.copy_from_slice(p.b.data());
    }
    gemm(
        T::one(),
        MatRef::dense(x.data(), batch * time, inp),
        MatRef::dense(p.w.data(), inp, g4),
        T::one(),
        MatMut::dense(&mut gates, batch * time, g4),
    );

    let mut cells = vec![T::zero(); batch * time * h];
    let mut tanh_cells = vec![T::zero(); batch * time * h];
    let mut hidden = vec![T::zero(); batch * time * h];
    let mut h_in = vec![T::zero(); batch * h];

    for t in 0..time {
        if t > 0 {
            for b in 0..batch {
                let src = &hidden[(b * time + t - 1) * h..(b * time + t) * h];
                let dst = &mut h_in[b * h..(b + 1) * h];
                match &recurrent_mask {
                    Some(m) => {
                        for ((d, &s), &k) in dst.iter_mut().zip(src).zip(&m[b * h..(b + 1) * h]) {
                            *d = s * k;
                        }
                    }
                    None => dst.copy_from_slice(src),
                }
            }
            let zt = MatMut { data: &mut gates[t * g4..], rows: batch, cols: g4, rs: time * g4, cs: 1 };
            gemm(T::one(), MatRef::dense(&h_in, batch, h), MatRef::dense(p.u.data(), h, g4), T::one(), zt);
        }
        for b in 0..batch {
            let z = &mut gates[(b * time + t) * g4..(b * time + t + 1) * g4];
            let cell_off = (b * time + t) * h;
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                z[j] = i;
                z[h + j] = f;
                z[2 * h + j] = g;
                z[3 * h + j] = o;
                let c_prev = if t > 0 { cells[cell_off - h + j] } else { T::zero() };
                let c = f * c_prev + i * g;
                let tc = c.tanh();
                cells[cell_off + j] = c;
                tanh_cells[cell_off + j] = tc;
                hidden[cell_off + j] = o * tc;
            }
        }
    }
    let out = Tensor::from_vec(&[batch, time, h], hidden.clone())?;
    Ok((out, LstmCache { x: x.clone(), gates, cells, tanh_cells, hidden, mask: recurrent_mask }))
}

/// Returns `(dx, grads)` given the gradient of the loss wrt every output step.
pub fn lstm_backward<T: Scalar>(
    p: &LstmParams<T>,
    cache: &LstmCache<T>,
    dh_seq: &Tensor<T>,
) -> Result<(Tensor<T>, LstmGrads<T>)> {
    let (inp, h) = p.check()?;
    let (batch, time, _) = cache.x.dims3("lstm_backward")?;
    dh_seq.expect_shape("lstm_backward", &[batch, time, h])?;
    let g4 = 4 * h;

    let mut dz = vec![T::zero(); batch * time * g4];
    let mut du = Tensor::zeros(&[h, g4]);
    let mut dh_next = vec![T::zero(); batch * h];
    let mut dc_next = vec![T::zero(); batch * h];
    let mut h_in = vec![T::zero(); batch * h];
    let mut dh_in = vec![T::zero(); batch * h];

    for t in (0..time).rev() {
        for b in 0..batch {
            let gate = &cache.gates[(b * time + t) * g4..(b * time + t + 1) * g4];
            let off = (b * time + t) * h;
            let dzt = &mut dz[(b * time + t) * g4..(b * time + t + 1) * g4];
            for j in 0..h {
                let (i, f, g, o) = (gate[j], gate[h + j], gate[2 * h + j], gate[3 * h + j]);
                let tc = cache.tanh_cells[off + j];
                let dh = dh_seq.data()[off + j] + dh_next[b * h + j];
                let dc = dh * o * (T::one() - tc * tc) + dc_next[b * h + j];
                let c_prev = if t > 0 { cache.cells[off - h + j] } else { T::zero() };
                dzt[j] = dc * g * i * (T::one() - i);
                dzt[h + j] = dc * c_prev * f * (T::one() - f);
                dzt[2 * h + j] = dc * i * (T::one() - g * g);
                dzt[3 * h + j] = dh * tc * o * (T::one() - o);
                dc_next[b * h + j] = dc * f;
            }
        }
        if t == 0 {
            break;
        }
        let dzt = MatRef { data: &dz[t * g4..], rows: batch, cols: g4, rs: time * g4, cs: 1 };
        for b in 0..batch {
            let src = &cache.hidden[(b * time + t - 1) * h..(b * time + t) * h];
            let dst = &mut h_in[b * h..(b + 1) * h];
            match &cache.mask {
                Some(m) => {
                    for ((d, &s), &k) in dst.iter_mut().zip(src).zip(&m[b * h..(b + 1) * h]) {
                        *d = s * k;
                    }
                }
                None => dst.copy_from_slice(src),
            }
        }
        gemm(T::one(), MatRef::dense(&h_in, batch, h).t(), dzt, T::one(), MatMut::dense(du.data_mut(), h, g4));
        gemm(T::one(), dzt, MatRef::dense(p.u.data(), h, g4).t(), T::zero(), MatMut::dense(&mut dh_in, batch, h));
        match &cache.mask {
            Some(m) => {
                for ((d, &g), &k) in dh_next.iter_mut().zip(&dh_in).zip(m) {
                    *d = g * k;
                }
            }
            None => dh_next.copy_from_slice(&dh_in),
        }
    }

    let mut dw = Tensor::zeros(&[inp, g4]);
    let mut dx = Tensor::zeros(&[batch, time, inp]);
    let mut db = Tensor::zeros(&[g4]);
    let dz_all = MatRef::dense(&dz, batch * time, g4);
    gemm(T::one(), MatRef::dense(cache.x.data(), batch * time, inp).t(), dz_all, T::zero(), MatMut::dense(dw.data_mut(), inp, g4));
    gemm(T::one(), dz_all, MatRef::dense(p.w.data(), inp, g4).t(), T::zero(), MatMut::dense(dx.data_mut(), batch * time, inp));
    for row in dz.chunks_exact(g4) {
        for (acc, &g) in db.data_mut().iter_mut().zip(row) {
            *acc += g;
        }
    }
    Ok((dx, LstmGrads { dw, du, db }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_cell(w: f64) -> LstmParams<f64> {
        LstmParams {
            w: Tensor::full(&[1, 4], w),
            u: Tensor::zeros(&[1, 4]),
            b: Tensor::zeros(&[4]),
        }
    }

    #[test]
    fn zero_weights_keep_state_at_zero() {
        let p = LstmParams {
            w: Tensor::zeros(&[2, 12]),
            u: Tensor::zeros(&[3, 12]),
            b: Tensor::zeros(&[12]),
        };
        let x = Tensor::from_vec(&[1, 4, 2], vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0, -1.0, 2.0]).unwrap();
        let (h, _) = lstm_forward(&x, &p, None).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_hand_evaluation() {
        let p = scalar_cell(1.0);
        let (h0, _) = lstm_forward(&Tensor::zeros(&[1, 1, 1]), &p, None).unwrap();
        assert_eq!(h0.data(), &[0.0]);

        let (h1, _) = lstm_forward(&Tensor::full(&[1, 1, 1], 1.0), &p, None).unwrap();
        let s: f64 = 0.731_058_578_630_004_9; // sigmoid(1)
        let c = s * 1.0f64.tanh();
        assert!((c - 0.556_769).abs() < 1e-6);
        let h = s * c.tanh();
        assert!((h - 0.369_606).abs() < 1e-6);
        assert!((h1.data()[0] - h).abs() < 1e-12, "h = {}", h1.data()[0]);
    }

    #[test]
    fn rejects_wrong_feature_count() {
        let p = scalar_cell(1.0);
        assert!(lstm_forward(&Tensor::zeros(&[1, 3, 2]), &p, None).is_err());
    }
}
