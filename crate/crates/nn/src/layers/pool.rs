use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Argmax bookkeeping from [`max_pool1d`]: offset within each window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolIndices {
    pub input_shape: [usize; 3],
    pub pool: usize,
    pub offsets: Vec<u8>,
}

/// Non-overlapping max pooling along time; a trailing partial window is
/// dropped. Ties resolve to the first position.
pub fn max_pool1d<T: Scalar>(x: &Tensor<T>, pool: usize) -> Result<(Tensor<T>, PoolIndices)> {
    let (batch, time, ch) = x.dims3("max_pool1d")?;
    if pool == 0 || pool > u8::MAX as usize + 1 || time < pool {
        return shape_err("max_pool1d", format!("pool {pool} over time {time}"));
    }
    let t_out = time / pool;
    let mut y = Tensor::zeros(&[batch, t_out, ch]);
    let mut offsets = vec![0u8; batch * t_out * ch];
    let xd = x.data();
    let yd = y.data_mut();
    for b in 0..batch {
        for t in 0..t_out {
            let out = (b * t_out + t) * ch;
            let base = (b * time + t * pool) * ch;
            yd[out..out + ch].copy_from_slice(&xd[base..base + ch]);
            for j in 1..pool {
                let row = &xd[base + j * ch..base + (j + 1) * ch];
                for c in 0..ch {
                    // a NaN wins its window and stays there
                    if row[c] > yd[out + c] || (row[c].is_nan() && !yd[out + c].is_nan()) {
                        yd[out + c] = row[c];
                        offsets[out + c] = j as u8;
                    }
                }
            }
        }
    }
    Ok((y, PoolIndices { input_shape: [batch, time, ch], pool, offsets }))
}

/// Routes each output gradient back to the position that won its window.
pub fn max_pool1d_backward<T: Scalar>(dy: &Tensor<T>, idx: &PoolIndices) -> Result<Tensor<T>> {
    let [batch, time, ch] = idx.input_shape;
    let t_out = time / idx.pool;
    dy.expect_shape("max_pool1d_backward", &[batch, t_out, ch])?;
    let mut dx = Tensor::zeros(&idx.input_shape);
    let dxd = dx.data_mut();
    for b in 0..batch {
        for t in 0..t_out {
            let out = (b * t_out + t) * ch;
            for c in 0..ch {
                let j = idx.offsets[out + c] as usize;
                dxd[(b * time + t * idx.pool + j) * ch + c] += dy.data()[out + c];
            }
        }
    }
    Ok(dx)
}
