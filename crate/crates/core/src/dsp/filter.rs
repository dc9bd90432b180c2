//! IIR design (notch, Butterworth bandpass) and cascaded biquad filtering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DspError;

/// One biquad, `a0` normalised to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + self.b1 * z_inv + self.b2 * z2) / (1.0 + self.a1 * z_inv + self.a2 * z2)
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IirFilter {
    pub sections: Vec<Sos>,
    pub description: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterMode {
    /// Forward then backward; squared magnitude, no phase shift.
    #[default]
    ZeroPhase,
    Forward,
}

impl IirFilter {
    /// Complex response at `freq` Hz for a single forward pass.
    pub fn response(&self, freq: f64, sampling_rate: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / sampling_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude_db(&self, freq: f64, sampling_rate: f64) -> f64 {
        20.0 * self.response(freq, sampling_rate).norm().log10()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(|s| s.poles().iter().all(|p| p.norm() < 1.0))
    }
}

fn check_freq(f: f64, fs: f64) -> Result<(), DspError> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(DspError::InvalidFrequency(format!("sampling rate {fs}")));
    }
    if !(f > 0.0 && f < fs / 2.0) {
        return Err(DspError::InvalidFrequency(format!("{f} Hz not inside (0, {})", fs / 2.0)));
    }
    Ok(())
}

/// Second-order notch with zeros on the unit circle at `f0`, -3 dB
/// bandwidth `f0 / q`, unit gain at DC and Nyquist.
pub fn design_notch(f0: f64, sampling_rate: f64, q: f64) -> Result<IirFilter, DspError> {
    check_freq(f0, sampling_rate)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(DspError::InvalidFrequency(format!("quality factor {q}")));
    }
    let w0 = 2.0 * PI * f0 / sampling_rate;
    let bw = w0 / q;
    let gain = 1.0 / (1.0 + (bw / 2.0).tan());
    let c = w0.cos();
    Ok(IirFilter {
        sections: vec![Sos { b0: gain, b1: -2.0 * gain * c, b2: gain, a1: -2.0 * gain * c, a2: 2.0 * gain - 1.0 }],
        description: format!("notch {f0} Hz, Q {q}, fs {sampling_rate}"),
    })
}

/// Butterworth bandpass from the 2-pole lowpass prototype: lowpass to
/// bandpass transform at prewarped edges, bilinear map, two biquads
/// (4 poles). Unit gain at the geometric centre frequency.
pub fn design_butter_bandpass(f_low: f64, f_high: f64, sampling_rate: f64) -> Result<IirFilter, DspError> {
    check_freq(f_low, sampling_rate)?;
    check_freq(f_high, sampling_rate)?;
    if f_low >= f_high {
        return Err(DspError::InvalidFrequency(format!("low edge {f_low} not below high edge {f_high}")));
    }
    let fs2 = 2.0 * sampling_rate;
    let w1 = fs2 * (PI * f_low / sampling_rate).tan();
    let w2 = fs2 * (PI * f_high / sampling_rate).tan();
    let bw = w2 - w1;
    let w0_sq = w1 * w2;

    // prototype pole in the upper half plane; its conjugate yields the
    // conjugates of the two bandpass poles below
    let p = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
    let pb = p * bw;
    let disc = (pb * pb - 4.0 * w0_sq).sqrt();
    let analog = [(pb + disc) / 2.0, (pb - disc) / 2.0];

    let mut sections: Vec<Sos> = analog
        .iter()
        .map(|&s| {
            let z = (fs2 + s) / (fs2 - s);
            // zeros: s = 0 maps to z = 1, s = inf to z = -1
            Sos { b0: 1.0, b1: 0.0, b2: -1.0, a1: -2.0 * z.re, a2: z.norm_sqr() }
        })
        .collect();

    let centre = sampling_rate / PI * (w0_sq.sqrt() / fs2).atan();
    let mut filter = IirFilter { sections: sections.clone(), description: String::new() };
    let g = filter.response(centre, sampling_rate).norm();
    let per_section = g.powf(-1.0 / sections.len() as f64);
    for s in &mut sections {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    filter.sections = sections;
    filter.description = format!("butterworth bandpass {f_low}-{f_high} Hz (2-pole prototype), fs {sampling_rate}");
    Ok(filter)
}

fn run_sections(sections: &[Sos], x: &mut [f64]) {
    for s in sections {
        // transposed direct form II, zero initial state
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * y + z2;
            z2 = s.b2 * input - s.a2 * y;
            *v = y;
        }
    }
}

/// Zero-phase application (see [`apply_filter_with`]).
pub fn apply_filter(filter: &IirFilter, x: &[f64]) -> Result<Vec<f64>, DspError> {
    apply_filter_with(filter, x, FilterMode::ZeroPhase)
}

/// Runs every section from zero state; no padding, so the map is linear.
pub fn apply_filter_with(filter: &IirFilter, x: &[f64], mode: FilterMode) -> Result<Vec<f64>, DspError> {
    if x.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(DspError::NonFiniteInput(i));
    }
    let mut y = x.to_vec();
    run_sections(&filter.sections, &mut y);
    if mode == FilterMode::ZeroPhase {
        y.reverse();
        run_sections(&filter.sections, &mut y);
        y.reverse();
    }
    Ok(y)
}
