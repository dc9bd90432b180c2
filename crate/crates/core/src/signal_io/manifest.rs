//! Cohort manifest: one JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: Label,
    pub ahi: f64,
    /// Relative to the manifest's directory.
    pub edf_path: String,
    pub xml_path: String,
    pub seed: u64,
}

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], mut w: W) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_manifest<R: BufRead>(r: R) -> std::io::Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("manifest line {}: {e}", i + 1))
        })?;
        out.push(entry);
    }
    Ok(out)
}
