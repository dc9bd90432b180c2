//! The nine-scalar feature vector and its CSV table.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::peaks::detect_r_peaks;
use super::series::{compute_edr, compute_rr, mean_rr, pnn50, sdsd, serial_correlation, Pnn50Mode};
use super::spectrum::band_powers;
use super::HrvError;
use crate::dsp::EventWindow;
use crate::signal_io::Class;

pub const FEATURE_NAMES: [&str; 9] =
    ["mean_rr", "r2", "r3", "pnn50", "sdsd", "norm_vlf_rr", "norm_vlf_edr", "norm_lf_edr", "lf_hf_ratio_edr"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_rr: f64,
    pub r2: f64,
    pub r3: f64,
    pub pnn50: f64,
    pub sdsd: f64,
    pub norm_vlf_rr: f64,
    pub norm_vlf_edr: f64,
    pub norm_lf_edr: f64,
    pub lf_hf_ratio_edr: f64,
}

impl FeatureVector {
    pub const LEN: usize = 9;

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.mean_rr,
            self.r2,
            self.r3,
            self.pnn50,
            self.sdsd,
            self.norm_vlf_rr,
            self.norm_vlf_edr,
            self.norm_lf_edr,
            self.lf_hf_ratio_edr,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        let [mean_rr, r2, r3, pnn50, sdsd, norm_vlf_rr, norm_vlf_edr, norm_lf_edr, lf_hf_ratio_edr] = a;
        FeatureVector { mean_rr, r2, r3, pnn50, sdsd, norm_vlf_rr, norm_vlf_edr, norm_lf_edr, lf_hf_ratio_edr }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub pnn50_mode: Pnn50Mode,
}

pub fn extract_features(samples: &[f64], sampling_rate: f64, cfg: &FeatureConfig) -> Result<FeatureVector, HrvError> {
    let peaks = detect_r_peaks(samples, sampling_rate)?;
    let rr = compute_rr(&peaks)?;
    let edr = compute_edr(&peaks)?;
    let x = &rr.intervals;
    let rr_bands = band_powers(&rr.times, x)?;
    let edr_bands = band_powers(&edr.times, &edr.values)?;
    Ok(FeatureVector {
        mean_rr: mean_rr(x)?,
        r2: serial_correlation(x, 2)?,
        r3: serial_correlation(x, 3)?,
        pnn50: pnn50(x, cfg.pnn50_mode)? as f64,
        sdsd: sdsd(x)?,
        norm_vlf_rr: rr_bands.norm_vlf,
        norm_vlf_edr: edr_bands.norm_vlf,
        norm_lf_edr: edr_bands.norm_lf,
        lf_hf_ratio_edr: edr_bands.lf_hf_ratio,
    })
}

pub fn extract_feature_vector(window: &EventWindow, cfg: &FeatureConfig) -> Result<FeatureVector, HrvError> {
    extract_features(&window.samples, window.sampling_rate, cfg)
}

/// One row of the feature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub window_id: String,
    pub label: Class,
    pub features: FeatureVector,
}

#[derive(Serialize, Deserialize)]
struct FlatRow {
    subject_id: String,
    window_id: String,
    label: String,
    mean_rr: f64,
    r2: f64,
    r3: f64,
    pnn50: f64,
    sdsd: f64,
    norm_vlf_rr: f64,
    norm_vlf_edr: f64,
    norm_lf_edr: f64,
    lf_hf_ratio_edr: f64,
}

pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<(), HrvError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let f = r.features;
        w.serialize(FlatRow {
            subject_id: r.subject_id.clone(),
            window_id: r.window_id.clone(),
            label: r.label.name().to_string(),
            mean_rr: f.mean_rr,
            r2: f.r2,
            r3: f.r3,
            pnn50: f.pnn50,
            sdsd: f.sdsd,
            norm_vlf_rr: f.norm_vlf_rr,
            norm_vlf_edr: f.norm_vlf_edr,
            norm_lf_edr: f.norm_lf_edr,
            lf_hf_ratio_edr: f.lf_hf_ratio_edr,
        })
        .map_err(|e| HrvError::Table(e.to_string()))?;
    }
    w.flush().map_err(|e| HrvError::Table(e.to_string()))
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, HrvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| HrvError::Table(e.to_string()))?.clone();
    let want: Vec<&str> = ["subject_id", "window_id", "label"].into_iter().chain(FEATURE_NAMES).collect();
    if header.iter().collect::<Vec<_>>() != want {
        return Err(HrvError::Table(format!("unexpected header {:?}", header)));
    }
    rd.deserialize::<FlatRow>()
        .map(|r| {
            let r = r.map_err(|e| HrvError::Table(e.to_string()))?;
            let label = r.label.parse::<Class>().map_err(|e| HrvError::Table(e.to_string()))?;
            Ok(FeatureRow {
                subject_id: r.subject_id,
                window_id: r.window_id,
                label,
                features: FeatureVector::from_array([
                    r.mean_rr,
                    r.r2,
                    r.r3,
                    r.pnn50,
                    r.sdsd,
                    r.norm_vlf_rr,
                    r.norm_vlf_edr,
                    r.norm_lf_edr,
                    r.lf_hf_ratio_edr,
                ]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            FeatureRow {
                subject_id: "N0001".into(),
                window_id: "N0001@120".into(),
                label: Class::Normal,
                features: FeatureVector::from_array([1000.0, 0.1, -0.2, 1.0, 12.5, 0.3, 0.2, 0.3, f64::INFINITY]),
            },
            FeatureRow {
                subject_id: "S0001".into(),
                window_id: "S0001@60.5".into(),
                label: Class::Severe,
                features: FeatureVector::from_array([812.25, 0.5, 0.25, 0.0, 3.0, 0.125, 0.0625, 0.5, 0.75]),
            },
        ];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("subject_id,window_id,label,mean_rr,r2,r3,pnn50,sdsd,"));
        assert_eq!(read_feature_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_feature_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
