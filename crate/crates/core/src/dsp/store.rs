//! Window store: `windows.bin` plus a `windows.json` index.
//!
//! `windows.bin`, little-endian:
//!
//! ```text
//! magic        8 bytes "OSAWINDW"
//! version      u32 (1)
//! count        u32
//! window_len   u32  samples per window
//! sampling     f64  Hz
//! per window:
//!   id_len u16, subject_id (UTF-8)
//!   label u8 (0 normal, 1 severe)
//!   event_start f64, event_duration f64
//!   name_len u16, event name (UTF-8)
//!   samples f32 x window_len
//! ```
//!
//! The index repeats the metadata with the byte offset of each window's
//! samples, for tools that want random access.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::window::EventWindow;
use crate::signal_io::{Class, EventAnnotation};

const MAGIC: &[u8; 8] = b"OSAWINDW";
pub const STORE_VERSION: u32 = 1;
pub const BIN_NAME: &str = "windows.bin";
pub const INDEX_NAME: &str = "windows.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("window store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("window store index: {0}")]
    Json(#[from] serde_json::Error),
    #[error("corrupt window store: {0}")]
    Corrupt(String),
    #[error("windows differ in length or sampling rate")]
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub window_id: String,
    pub subject_id: String,
    pub label: Class,
    pub event_start: f64,
    pub event_duration: f64,
    pub event_name: String,
    pub sample_offset: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreIndex {
    pub version: u32,
    pub sampling_rate: f64,
    pub window_len: usize,
    pub windows: Vec<IndexEntry>,
}

pub fn encode_windows(windows: &[EventWindow]) -> Result<(Vec<u8>, StoreIndex), StoreError> {
    let (len, fs) = windows.first().map_or((0, 0.0), |w| (w.samples.len(), w.sampling_rate));
    if windows.iter().any(|w| w.samples.len() != len || w.sampling_rate != fs) {
        return Err(StoreError::Inconsistent);
    }
    let mut buf = Vec::with_capacity(32 + windows.len() * (len * 4 + 64));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&STORE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(windows.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(len as u32).to_le_bytes());
    buf.extend_from_slice(&fs.to_le_bytes());
    let mut entries = Vec::with_capacity(windows.len());
    for w in windows {
        buf.extend_from_slice(&(w.subject_id.len() as u16).to_le_bytes());
        buf.extend_from_slice(w.subject_id.as_bytes());
        buf.push(w.label.index() as u8);
        buf.extend_from_slice(&w.source_event.start.to_le_bytes());
        buf.extend_from_slice(&w.source_event.duration.to_le_bytes());
        buf.extend_from_slice(&(w.source_event.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(w.source_event.name.as_bytes());
        entries.push(IndexEntry {
            window_id: w.window_id(),
            subject_id: w.subject_id.clone(),
            label: w.label,
            event_start: w.source_event.start,
            event_duration: w.source_event.duration,
            event_name: w.source_event.name.clone(),
            sample_offset: buf.len() as u64,
        });
        for &v in &w.samples {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok((buf, StoreIndex { version: STORE_VERSION, sampling_rate: fs, window_len: len, windows: entries }))
}

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let s = self
            .b
            .get(self.pos..self.pos + n)
            .ok_or_else(|| StoreError::Corrupt(format!("truncated at byte {}", self.pos)))?;
        self.pos += n;
        Ok(s)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N], StoreError> {
        Ok(self.take(N)?.try_into().expect("sized"))
    }
    fn string(&mut self) -> Result<String, StoreError> {
        let n = u16::from_le_bytes(self.arr()?) as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| StoreError::Corrupt("non-UTF-8 text".into()))
    }
}

pub fn decode_windows(bytes: &[u8]) -> Result<Vec<EventWindow>, StoreError> {
    let mut c = Cursor { b: bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(StoreError::Corrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(c.arr()?);
    if version != STORE_VERSION {
        return Err(StoreError::Corrupt(format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(c.arr()?) as usize;
    let len = u32::from_le_bytes(c.arr()?) as usize;
    let fs = f64::from_le_bytes(c.arr()?);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let subject_id = c.string()?;
        let label = Class::from_index(c.take(1)?[0] as usize).ok_or_else(|| StoreError::Corrupt("bad label".into()))?;
        let start = f64::from_le_bytes(c.arr()?);
        let duration = f64::from_le_bytes(c.arr()?);
        let name = c.string()?;
        let raw = c.take(len * 4)?;
        let samples = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64).collect();
        out.push(EventWindow {
            samples,
            sampling_rate: fs,
            label,
            subject_id,
            source_event: EventAnnotation { name, start, duration },
        });
    }
    if c.pos != bytes.len() {
        return Err(StoreError::Corrupt("trailing bytes".into()));
    }
    Ok(out)
}

pub fn write_window_store(dir: &Path, windows: &[EventWindow]) -> Result<StoreIndex, StoreError> {
    fs::create_dir_all(dir)?;
    let (bin, index) = encode_windows(windows)?;
    fs::write(dir.join(BIN_NAME), bin)?;
    fs::write(dir.join(INDEX_NAME), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}

/// Reads the binary and checks it against the index.
pub fn read_window_store(dir: &Path) -> Result<Vec<EventWindow>, StoreError> {
    let windows = decode_windows(&fs::read(dir.join(BIN_NAME))?)?;
    let index: StoreIndex = serde_json::from_str(&fs::read_to_string(dir.join(INDEX_NAME))?)?;
    if index.windows.len() != windows.len()
        || index.windows.iter().zip(&windows).any(|(e, w)| e.window_id != w.window_id() || e.label != w.label)
    {
        return Err(StoreError::Corrupt("index does not match windows.bin".into()));
    }
    Ok(windows)
}
