//! Valid-padding 1-D cross-correlation over `[batch, time, channels]`.
//!
//! Because the input is channel-last, the receptive field of output step `t`
//! is the contiguous run `x[t*stride .. t*stride + k, :]`, so the im2col
//! matrix is just a strided view of the input and no copy is made.

use crate::error::{shape_err, Result};
use crate::scalar::{gemm, MatMut, MatRef, Scalar};
use crate::tensor::Tensor;

/// Output length of a valid convolution, `None` when the input is shorter
/// than the kernel.
pub fn conv_output_len(time: usize, kernel: usize, stride: usize) -> Option<usize> {
    if kernel == 0 || stride == 0 || time < kernel {
        return None;
    }
    Some((time - kernel) / stride + 1)
}

fn check(x: &Tensor<impl Scalar>, w: &Tensor<impl Scalar>, b: &Tensor<impl Scalar>, stride: usize) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let (batch, time, cin) = x.dims3("conv1d")?;
    let (k, wcin, cout) = w.dims3("conv1d")?;
    if wcin != cin {
        return shape_err("conv1d", format!("input has {cin} channels, kernel expects {wcin}"));
    }
    if b.shape() != [cout] {
        return shape_err("conv1d", format!("bias {:?} for {cout} outputs", b.shape()));
    }
    let Some(t_out) = conv_output_len(time, k, stride) else {
        return shape_err("conv1d", format!("time {time} shorter than kernel {k} (stride {stride})"));
    };
    Ok((batch, time, cin, k, cout, t_out))
}

/// `y[b, t, o] = sum_{j, c} w[j, c, o] * x[b, t*stride + j, c] + bias[o]`.
pub fn conv1d<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>, stride: usize) -> Result<Tensor<T>> {
    let (batch, time, cin, k, cout, t_out) = check(x, w, b, stride)?;
    let mut y = Tensor::zeros(&[batch, t_out, cout]);
    let bias = b.data();
    for (bi, yb) in y.data_mut().chunks_exact_mut(t_out * cout).enumerate() {
        for row in yb.chunks_exact_mut(cout) {
            row.copy_from_slice(bias);
        }
        let xb = &x.data()[bi * time * cin..(bi + 1) * time * cin];
        let cols = MatRef { data: xb, rows: t_out, cols: k * cin, rs: stride * cin, cs: 1 };
        gemm(T::one(), cols, MatRef::dense(w.data(), k * cin, cout), T::one(), MatMut::dense(yb, t_out, cout));
    }
    Ok(y)
}

/// Gradients of [`conv1d`] with respect to input, kernel and bias.
pub struct Conv1dGrads<T> {
    pub dx: Tensor<T>,
    pub dw: Tensor<T>,
    pub db: Tensor<T>,
}

pub fn conv1d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    dy: &Tensor<T>,
) -> Result<Conv1dGrads<T>> {
    conv1d_backward_impl(x, w, b, stride, dy, true)
}

/// As [`conv1d_backward`]; with `need_dx == false` the input gradient is
/// left zero, which saves a product for the first layer of a network.
pub(crate) fn conv1d_backward_impl<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    dy: &Tensor<T>,
    need_dx: bool,
) -> Result<Conv1dGrads<T>> {
    let (batch, time, cin, k, cout, t_out) = check(x, w, b, stride)?;
    dy.expect_shape("conv1d_backward", &[batch, t_out, cout])?;
    let kc = k * cin;
    let mut dx = Tensor::zeros(&[batch, time, cin]);
    let mut dw = Tensor::zeros(&[k, cin, cout]);
    let mut db = Tensor::zeros(&[cout]);
    let mut cols_grad = vec![T::zero(); t_out * kc];

    for bi in 0..batch {
        let xb = &x.data()[bi * time * cin..(bi + 1) * time * cin];
        let dyb = &dy.data()[bi * t_out * cout..(bi + 1) * t_out * cout];
        for row in dyb.chunks_exact(cout) {
            for (acc, &g) in db.data_mut().iter_mut().zip(row) {
                *acc += g;
            }
        }
        let cols = MatRef { data: xb, rows: t_out, cols: kc, rs: stride * cin, cs: 1 };
        gemm(T::one(), cols.t(), MatRef::dense(dyb, t_out, cout), T::one(), MatMut::dense(dw.data_mut(), kc, cout));

        if !need_dx {
            continue;
        }
        // Receptive fields overlap when k > stride, so go through a dense
        // column buffer and scatter-add.
        gemm(
            T::one(),
            MatRef::dense(dyb, t_out, cout),
            MatRef::dense(w.data(), kc, cout).t(),
            T::zero(),
            MatMut::dense(&mut cols_grad, t_out, kc),
        );
        let dxb = &mut dx.data_mut()[bi * time * cin..(bi + 1) * time * cin];
        for (t, g) in cols_grad.chunks_exact(kc).enumerate() {
            let start = t * stride * cin;
            for (d, &v) in dxb[start..start + kc].iter_mut().zip(g) {
                *d += v;
            }
        }
    }
    Ok(Conv1dGrads { dx, dw, db })
}
