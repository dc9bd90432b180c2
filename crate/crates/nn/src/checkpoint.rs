//! Parameter checkpoints: a binary tensor file plus a JSON sidecar holding
//! the [`ModelConfig`].
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "OSANNCKP"
//! version   u32      1
//! count     u32      number of tensors
//! per tensor:
//!   name_len u16, name (UTF-8), rank u8, dims u64 x rank
//! data      f64 x sum(product(dims)), tensors in table order
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ModelConfig;
use crate::error::{NnError, Result};
use crate::model::Model;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"OSANNCKP";
const VERSION: u32 = 1;

fn all_tensors<T: Scalar>(model: &Model<T>) -> Vec<(String, &Tensor<T>)> {
    let mut out: Vec<(String, &Tensor<T>)> = model.parameter_names().into_iter().zip(model.parameters()).collect();
    for (i, c) in model.conv.iter().enumerate() {
        out.push((format!("conv{i}.running_mean"), &c.running_mean));
        out.push((format!("conv{i}.running_var"), &c.running_var));
    }
    out
}

pub fn encode<T: Scalar>(model: &Model<T>) -> Vec<u8> {
    let tensors = all_tensors(model);
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in &tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(t.shape().len() as u8);
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for (_, t) in &tensors {
        for v in t.data() {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(NnError::Checkpoint("truncated file".into()));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Rebuilds a model for `config` and fills it from `bytes`; tensor names
/// and shapes must match exactly.
pub fn decode<T: Scalar>(config: &ModelConfig, bytes: &[u8]) -> Result<Model<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(r.array()?) as usize;
    let mut model = Model::<T>::new(config)?;
    let expected: Vec<(String, Vec<usize>)> = all_tensors(&model).into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    if count != expected.len() {
        return Err(NnError::Checkpoint(format!("{count} tensors, config implies {}", expected.len())));
    }
    for (want_name, want_shape) in &expected {
        let len = u16::from_le_bytes(r.array()?) as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| NnError::Checkpoint("non-UTF-8 tensor name".into()))?;
        let rank = r.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(r.array()?) as usize);
        }
        if name != want_name || &shape != want_shape {
            return Err(NnError::Checkpoint(format!("found {name} {shape:?}, expected {want_name} {want_shape:?}")));
        }
    }
    for t in model.parameters_mut() {
        fill(t, &mut r)?;
    }
    for c in model.conv.iter_mut() {
        fill(&mut c.running_mean, &mut r)?;
        fill(&mut c.running_var, &mut r)?;
    }
    if r.pos != bytes.len() {
        return Err(NnError::Checkpoint("trailing bytes".into()));
    }
    Ok(model)
}

fn fill<T: Scalar>(t: &mut Tensor<T>, r: &mut Reader<'_>) -> Result<()> {
    for v in t.data_mut() {
        *v = T::lit(f64::from_le_bytes(r.array()?));
    }
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (binary tensors) and `path` with a `.json` extension (config).
pub fn save<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    fs::write(path, encode(model))?;
    fs::write(sidecar(path), serde_json::to_string_pretty(model.config())?)?;
    Ok(())
}

pub fn load<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let config: ModelConfig = serde_json::from_str(&fs::read_to_string(sidecar(path))?)?;
    decode(&config, &fs::read(path)?)
}
