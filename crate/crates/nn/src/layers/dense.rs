use crate::error::{shape_err, Result};
use crate::scalar::{gemm, MatMut, MatRef, Scalar};
use crate::tensor::Tensor;

fn check<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (batch, inp) = x.dims2("dense")?;
    let (win, out) = w.dims2("dense")?;
    if win != inp || b.shape() != [out] {
        return shape_err("dense", format!("x {:?}, W {:?}, b {:?}", x.shape(), w.shape(), b.shape()));
    }
    Ok((batch, inp, out))
}

/// `y = x W + b` for `x: [batch, in]`, `W: [in, out]`.
pub fn dense<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (batch, inp, out) = check(x, w, b)?;
    let mut y = Tensor::zeros(&[batch, out]);
    for row in y.data_mut().chunks_exact_mut(out) {
        row.copy_from_slice(b.data());
    }
    gemm(T::one(), MatRef::dense(x.data(), batch, inp), MatRef::dense(w.data(), inp, out), T::one(), MatMut::dense(y.data_mut(), batch, out));
    Ok(y)
}

/// Returns `(dx, dW, db)`.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (batch, inp, out) = check(x, w, b)?;
    dy.expect_shape("dense_backward", &[batch, out])?;
    let mut dx = Tensor::zeros(&[batch, inp]);
    let mut dw = Tensor::zeros(&[inp, out]);
    let mut db = Tensor::zeros(&[out]);
    gemm(T::one(), MatRef::dense(dy.data(), batch, out), MatRef::dense(w.data(), inp, out).t(), T::zero(), MatMut::dense(dx.data_mut(), batch, inp));
    gemm(T::one(), MatRef::dense(x.data(), batch, inp).t(), MatRef::dense(dy.data(), batch, out), T::zero(), MatMut::dense(dw.data_mut(), inp, out));
    for row in dy.data().chunks_exact(out) {
        for (acc, &g) in db.data_mut().iter_mut().zip(row) {
            *acc += g;
        }
    }
    Ok((dx, dw, db))
}
