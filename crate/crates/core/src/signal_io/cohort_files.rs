//! A cohort on disk: one EDF and one annotation XML per subject plus a
//! `manifest.jsonl` listing them.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use thiserror::Error;

use super::{
    label_subject, parse_annotations, read_edf, read_manifest, write_annotations, write_edf, write_manifest, EdfError, EdfHeader,
    ManifestEntry, SignalSpec, SubjectRecord, AnnotationError, DEFAULT_EVENT_PATTERNS,
};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum CohortFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Edf { path: String, source: EdfError },
    #[error("{path}: {source}")]
    Annotation { path: String, source: AnnotationError },
    #[error("{0}")]
    Invalid(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CohortFileError + '_ {
    move |source| CohortFileError::Io { path: path.display().to_string(), source }
}

/// Single-signal EDF with one-second data records and a symmetric physical
/// range rounded out to 0.01.
pub fn encode_subject_edf(record: &SubjectRecord) -> Result<Vec<u8>, EdfError> {
    let fs = record.ecg.sampling_rate;
    let spr = fs.round() as usize;
    if (fs - spr as f64).abs() > 1e-9 || spr == 0 {
        return Err(EdfError::TraceMismatch(format!("sampling rate {fs} is not a whole number of samples per second")));
    }
    let n_records = record.ecg.samples.len().div_ceil(spr);
    let mut trace = record.ecg.clone();
    trace.samples.resize(n_records * spr, 0.0);
    let peak = trace.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = (peak * 100.0).ceil() / 100.0 + 0.01;
    let spec = SignalSpec::new(&record.ecg.label, spr, (-bound, bound), (-32768, 32767));
    let header = EdfHeader::new(&record.subject_id, n_records, 1.0, vec![spec]);
    write_edf(&header, &[trace])
}

/// Writes every record and the manifest; `seeds[i]` is stored with record `i`.
pub fn write_cohort(dir: &Path, records: &[SubjectRecord], seeds: &[u64]) -> Result<Vec<ManifestEntry>, CohortFileError> {
    if records.len() != seeds.len() {
        return Err(CohortFileError::Invalid(format!("{} records but {} seeds", records.len(), seeds.len())));
    }
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut entries = Vec::new();
    for (r, &seed) in records.iter().zip(seeds) {
        let edf_name = format!("{}.edf", r.subject_id);
        let xml_name = format!("{}.xml", r.subject_id);
        let edf_path = dir.join(&edf_name);
        let bytes = encode_subject_edf(r).map_err(|source| CohortFileError::Edf { path: edf_path.display().to_string(), source })?;
        fs::write(&edf_path, bytes).map_err(io(&edf_path))?;
        let xml_path = dir.join(&xml_name);
        fs::write(&xml_path, write_annotations(&r.events)).map_err(io(&xml_path))?;
        entries.push(ManifestEntry { subject_id: r.subject_id.clone(), label: r.label, ahi: r.ahi, edf_path: edf_name, xml_path: xml_name, seed });
    }
    let path = dir.join(MANIFEST_FILE);
    let mut buf = Vec::new();
    write_manifest(&entries, &mut buf).map_err(io(&path))?;
    fs::write(&path, buf).map_err(io(&path))?;
    Ok(entries)
}

/// Loads one subject; the ECG is the first signal whose label mentions
/// "ECG" (or "EKG"), falling back to the first signal.
pub fn load_subject(dir: &Path, entry: &ManifestEntry) -> Result<SubjectRecord, CohortFileError> {
    let edf_path = dir.join(&entry.edf_path);
    let bytes = fs::read(&edf_path).map_err(io(&edf_path))?;
    let (_, traces) = read_edf(&bytes).map_err(|source| CohortFileError::Edf { path: edf_path.display().to_string(), source })?;
    let ecg = traces
        .iter()
        .find(|t| {
            let l = t.label.to_ascii_uppercase();
            l.contains("ECG") || l.contains("EKG")
        })
        .or(traces.first())
        .cloned()
        .ok_or_else(|| CohortFileError::Invalid(format!("{} has no signals", edf_path.display())))?;
    let xml_path = dir.join(&entry.xml_path);
    let xml = fs::read_to_string(&xml_path).map_err(io(&xml_path))?;
    let events = parse_annotations(&xml, &DEFAULT_EVENT_PATTERNS)
        .map_err(|source| CohortFileError::Annotation { path: xml_path.display().to_string(), source })?;
    let label = label_subject(entry.ahi).map_err(|e| CohortFileError::Invalid(format!("{}: {e}", entry.subject_id)))?;
    if label != entry.label {
        return Err(CohortFileError::Invalid(format!("{}: AHI {} gives {label:?}, manifest says {:?}", entry.subject_id, entry.ahi, entry.label)));
    }
    Ok(SubjectRecord { subject_id: entry.subject_id.clone(), ecg, events, ahi: entry.ahi, label, r_peaks: Vec::new() })
}

pub fn read_cohort_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, CohortFileError> {
    let path = dir.join(MANIFEST_FILE);
    let f = fs::File::open(&path).map_err(io(&path))?;
    read_manifest(BufReader::new(f)).map_err(io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{generate_synthetic_ecg, SynthConfig};

    #[test]
    fn cohort_round_trip() {
        let cfg = SynthConfig { duration: 20.5, event_plan: vec![(2.0, 15.0)], noise_sd: 0.02, ..Default::default() };
        let rec = generate_synthetic_ecg(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let entries = write_cohort(dir.path(), std::slice::from_ref(&rec), &[7]).unwrap();
        assert_eq!(read_cohort_manifest(dir.path()).unwrap(), entries);
        let back = load_subject(dir.path(), &entries[0]).unwrap();
        assert_eq!(back.events, rec.events);
        assert_eq!(back.label, rec.label);
        // padded to whole records, quantised to 16 bits
        assert_eq!(back.ecg.samples.len(), 21 * 512);
        let step = 2.0 * (rec.ecg.samples.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 0.02) / 65535.0;
        for (a, b) in rec.ecg.samples.iter().zip(&back.ecg.samples) {
            assert!((a - b).abs() <= step, "{a} vs {b}");
        }
    }
}
