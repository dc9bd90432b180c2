//! Classic EDF reading and writing.
//!
//! Numeric header fields keep the text they were read from; writing an
//! unmodified header reproduces the original bytes even when a field was
//! spelled `+5` or `5.0`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdfError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated data: header promises {expected} data bytes, file has {actual}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("{extra} bytes after the last data record")]
    TrailingData { extra: usize },
    #[error("degenerate calibration for signal {signal}: {detail}")]
    DegenerateCalibration { signal: usize, detail: String },
    #[error("signal {signal} sample {index}: physical value {value} outside the digital range")]
    RangeOverflow { signal: usize, index: usize, value: f64 },
    #[error("{0}")]
    TraceMismatch(String),
    #[error("field {field} cannot represent {value} in {width} characters")]
    FieldOverflow { field: &'static str, value: String, width: usize },
}

type Result<T> = std::result::Result<T, EdfError>;

/// A numeric header field with the text it came from.
#[derive(Clone, Debug, Default)]
struct Raw {
    text: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SignalSpec {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
    raw: [Raw; 5],
}

impl PartialEq for SignalSpec {
    fn eq(&self, o: &Self) -> bool {
        self.label == o.label
            && self.transducer == o.transducer
            && self.physical_dimension == o.physical_dimension
            && self.physical_min.to_bits() == o.physical_min.to_bits()
            && self.physical_max.to_bits() == o.physical_max.to_bits()
            && self.digital_min == o.digital_min
            && self.digital_max == o.digital_max
            && self.prefiltering == o.prefiltering
            && self.samples_per_record == o.samples_per_record
            && self.reserved == o.reserved
    }
}

impl SignalSpec {
    pub fn new(label: &str, samples_per_record: usize, physical: (f64, f64), digital: (i32, i32)) -> Self {
        Self {
            label: label.into(),
            transducer: String::new(),
            physical_dimension: "mV".into(),
            physical_min: physical.0,
            physical_max: physical.1,
            digital_min: digital.0,
            digital_max: digital.1,
            prefiltering: String::new(),
            samples_per_record,
            reserved: String::new(),
            raw: Default::default(),
        }
    }

    fn check_calibration(&self, signal: usize) -> Result<()> {
        if self.digital_min >= self.digital_max {
            return Err(EdfError::DegenerateCalibration {
                signal,
                detail: format!("digital range [{}, {}]", self.digital_min, self.digital_max),
            });
        }
        if self.physical_min == self.physical_max || !(self.physical_max - self.physical_min).is_finite() {
            return Err(EdfError::DegenerateCalibration {
                signal,
                detail: format!("physical range [{}, {}]", self.physical_min, self.physical_max),
            });
        }
        if self.digital_min < i16::MIN as i32 || self.digital_max > i16::MAX as i32 {
            return Err(EdfError::MalformedHeader(format!("signal {signal}: digital range exceeds 16 bits")));
        }
        Ok(())
    }

    fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min) as f64
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (digital as i32 - self.digital_min) as f64 * self.gain()
    }

    /// Nearest digital code, or `None` outside `[digital_min, digital_max]`.
    pub fn to_digital(&self, physical: f64) -> Option<i16> {
        let d = ((physical - self.physical_min) / self.gain()).round() + self.digital_min as f64;
        (d >= self.digital_min as f64 && d <= self.digital_max as f64).then_some(d as i16)
    }
}

#[derive(Clone, Debug)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    /// `dd.mm.yy`
    pub start_date: String,
    /// `hh.mm.ss`
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    pub num_records: usize,
    /// Seconds per data record.
    pub record_duration: f64,
    pub signals: Vec<SignalSpec>,
    raw: [Raw; 4],
}

impl PartialEq for EdfHeader {
    fn eq(&self, o: &Self) -> bool {
        self.version == o.version
            && self.patient_id == o.patient_id
            && self.recording_id == o.recording_id
            && self.start_date == o.start_date
            && self.start_time == o.start_time
            && self.header_bytes == o.header_bytes
            && self.reserved == o.reserved
            && self.num_records == o.num_records
            && self.record_duration.to_bits() == o.record_duration.to_bits()
            && self.signals == o.signals
    }
}

impl EdfHeader {
    pub fn new(patient_id: &str, num_records: usize, record_duration: f64, signals: Vec<SignalSpec>) -> Self {
        Self {
            version: "0".into(),
            patient_id: patient_id.into(),
            recording_id: String::new(),
            start_date: "01.01.00".into(),
            start_time: "00.00.00".into(),
            header_bytes: 256 + 256 * signals.len(),
            reserved: String::new(),
            num_records,
            record_duration,
            signals,
            raw: Default::default(),
        }
    }

    fn samples_per_record_total(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record).sum()
    }

    fn data_bytes(&self) -> Option<usize> {
        self.num_records.checked_mul(self.samples_per_record_total())?.checked_mul(2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalTrace {
    /// Physical units (mV for ECG).
    pub samples: Vec<f64>,
    pub sampling_rate: f64,
    pub label: String,
}

struct Fields<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Fields<'a> {
    fn next(&mut self, width: usize, name: &str) -> Result<&'a str> {
        let end = self.pos + width;
        let Some(chunk) = self.bytes.get(self.pos..end) else {
            return Err(EdfError::MalformedHeader(format!("header ends inside field {name}")));
        };
        if let Some(b) = chunk.iter().find(|b| !(32..=126).contains(*b)) {
            return Err(EdfError::MalformedHeader(format!("non-printable byte {b:#04x} in field {name}")));
        }
        self.pos = end;
        Ok(std::str::from_utf8(chunk).expect("printable ASCII"))
    }

    fn text(&mut self, width: usize, name: &str) -> Result<String> {
        Ok(self.next(width, name)?.trim_end_matches(' ').to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize, name: &str) -> Result<(T, Raw)> {
        let field = self.next(width, name)?;
        let v = field
            .trim()
            .parse()
            .map_err(|_| EdfError::MalformedHeader(format!("field {name}: cannot parse {field:?}")))?;
        Ok((v, Raw { text: Some(field.trim_end_matches(' ').to_string()) }))
    }
}

/// Parses a complete EDF file.
pub fn read_edf(bytes: &[u8]) -> Result<(EdfHeader, Vec<SignalTrace>)> {
    if bytes.len() < 256 {
        return Err(EdfError::MalformedHeader(format!("{} bytes, need at least 256", bytes.len())));
    }
    let mut f = Fields { bytes, pos: 0 };
    let version = f.text(8, "version")?;
    let patient_id = f.text(80, "patient_id")?;
    let recording_id = f.text(80, "recording_id")?;
    let start_date = f.text(8, "start_date")?;
    let start_time = f.text(8, "start_time")?;
    let (header_bytes, r0) = f.number::<usize>(8, "header_bytes")?;
    let reserved = f.text(44, "reserved")?;
    let (num_records, r1) = f.number::<i64>(8, "num_records")?;
    let (record_duration, r2) = f.number::<f64>(8, "record_duration")?;
    let (ns, r3) = f.number::<usize>(4, "num_signals")?;

    if num_records < 0 {
        return Err(EdfError::MalformedHeader(format!("num_records {num_records}")));
    }
    if !(record_duration > 0.0 && record_duration.is_finite()) {
        return Err(EdfError::MalformedHeader(format!("record duration {record_duration}")));
    }
    if header_bytes != 256 + 256 * ns {
        return Err(EdfError::MalformedHeader(format!("header_bytes {header_bytes} with {ns} signals")));
    }
    if bytes.len() < header_bytes {
        return Err(EdfError::MalformedHeader(format!("{} bytes, signal headers need {header_bytes}", bytes.len())));
    }

    // signal headers are stored field-major: all labels, then all transducers, ...
    let mut cols: Vec<Vec<&str>> = Vec::with_capacity(10);
    for (width, name) in [
        (16, "label"),
        (80, "transducer"),
        (8, "physical_dimension"),
        (8, "physical_min"),
        (8, "physical_max"),
        (8, "digital_min"),
        (8, "digital_max"),
        (80, "prefiltering"),
        (8, "samples_per_record"),
        (32, "signal_reserved"),
    ] {
        cols.push((0..ns).map(|_| f.next(width, name)).collect::<Result<_>>()?);
    }
    let num = |s: &str, name: &str| -> Result<f64> {
        s.trim().parse().map_err(|_| EdfError::MalformedHeader(format!("field {name}: cannot parse {s:?}")))
    };
    let int = |s: &str, name: &str| -> Result<i64> {
        s.trim().parse().map_err(|_| EdfError::MalformedHeader(format!("field {name}: cannot parse {s:?}")))
    };
    let raw = |s: &str| Raw { text: Some(s.trim_end_matches(' ').to_string()) };
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let spr = int(cols[8][i], "samples_per_record")?;
        if spr < 0 {
            return Err(EdfError::MalformedHeader(format!("signal {i}: samples_per_record {spr}")));
        }
        let dmin = int(cols[5][i], "digital_min")?;
        let dmax = int(cols[6][i], "digital_max")?;
        let spec = SignalSpec {
            label: cols[0][i].trim_end_matches(' ').into(),
            transducer: cols[1][i].trim_end_matches(' ').into(),
            physical_dimension: cols[2][i].trim_end_matches(' ').into(),
            physical_min: num(cols[3][i], "physical_min")?,
            physical_max: num(cols[4][i], "physical_max")?,
            digital_min: i32::try_from(dmin).map_err(|_| EdfError::MalformedHeader(format!("digital_min {dmin}")))?,
            digital_max: i32::try_from(dmax).map_err(|_| EdfError::MalformedHeader(format!("digital_max {dmax}")))?,
            prefiltering: cols[7][i].trim_end_matches(' ').into(),
            samples_per_record: spr as usize,
            reserved: cols[9][i].trim_end_matches(' ').into(),
            raw: [raw(cols[3][i]), raw(cols[4][i]), raw(cols[5][i]), raw(cols[6][i]), raw(cols[8][i])],
        };
        spec.check_calibration(i)?;
        signals.push(spec);
    }

    let header = EdfHeader {
        version,
        patient_id,
        recording_id,
        start_date,
        start_time,
        header_bytes,
        reserved,
        num_records: num_records as usize,
        record_duration,
        signals,
        raw: [r0, r1, r2, r3],
    };

    let expected = header
        .data_bytes()
        .ok_or_else(|| EdfError::MalformedHeader("data size overflows".into()))?;
    let data = &bytes[header_bytes..];
    if data.len() < expected {
        return Err(EdfError::TruncatedData { expected, actual: data.len() });
    }
    if data.len() > expected {
        return Err(EdfError::TrailingData { extra: data.len() - expected });
    }

    let mut traces: Vec<SignalTrace> = header
        .signals
        .iter()
        .map(|s| SignalTrace {
            samples: Vec::with_capacity(s.samples_per_record * header.num_records),
            sampling_rate: s.samples_per_record as f64 / record_duration,
            label: s.label.clone(),
        })
        .collect();
    let mut words = data.chunks_exact(2).map(|w| i16::from_le_bytes([w[0], w[1]]));
    for _ in 0..header.num_records {
        for (spec, trace) in header.signals.iter().zip(&mut traces) {
            for d in words.by_ref().take(spec.samples_per_record) {
                trace.samples.push(spec.to_physical(d));
            }
        }
    }
    Ok((header, traces))
}

fn pad(out: &mut Vec<u8>, s: &str, width: usize, field: &'static str) -> Result<()> {
    if s.len() > width || s.bytes().any(|b| !(32..=126).contains(&b)) {
        return Err(EdfError::FieldOverflow { field, value: s.into(), width });
    }
    out.extend_from_slice(s.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - s.len()));
    Ok(())
}

/// Shortest text of at most `width` characters that parses back to `v`.
fn format_real(v: f64, width: usize, field: &'static str) -> Result<String> {
    let plain = format!("{v}");
    if plain.len() <= width {
        return Ok(plain);
    }
    for p in 0..width {
        let s = format!("{v:.p$}");
        if s.len() <= width && s.parse::<f64>() == Ok(v) {
            return Ok(s);
        }
    }
    for p in 0..width {
        let s = format!("{v:.p$e}");
        if s.len() <= width && s.parse::<f64>() == Ok(v) {
            return Ok(s);
        }
    }
    Err(EdfError::FieldOverflow { field, value: plain, width })
}

fn numeric_text<T: std::str::FromStr + PartialEq>(raw: &Raw, value: T, fresh: impl FnOnce() -> Result<String>) -> Result<String> {
    match &raw.text {
        Some(t) if t.trim().parse::<T>().ok().as_ref() == Some(&value) => Ok(t.clone()),
        _ => fresh(),
    }
}

/// Serialises a header and matching traces. `header_bytes` is recomputed
/// from the signal count.
pub fn write_edf(header: &EdfHeader, traces: &[SignalTrace]) -> Result<Vec<u8>> {
    let ns = header.signals.len();
    if traces.len() != ns {
        return Err(EdfError::TraceMismatch(format!("{} traces for {ns} signals", traces.len())));
    }
    for (i, (s, t)) in header.signals.iter().zip(traces).enumerate() {
        s.check_calibration(i)?;
        let want = s.samples_per_record * header.num_records;
        if t.samples.len() != want {
            return Err(EdfError::TraceMismatch(format!("signal {i}: {} samples, header implies {want}", t.samples.len())));
        }
    }
    let header_bytes = 256 + 256 * ns;
    let mut out = Vec::with_capacity(header_bytes + header.data_bytes().unwrap_or(0));
    pad(&mut out, &header.version, 8, "version")?;
    pad(&mut out, &header.patient_id, 80, "patient_id")?;
    pad(&mut out, &header.recording_id, 80, "recording_id")?;
    pad(&mut out, &header.start_date, 8, "start_date")?;
    pad(&mut out, &header.start_time, 8, "start_time")?;
    pad(&mut out, &numeric_text(&header.raw[0], header_bytes, || Ok(header_bytes.to_string()))?, 8, "header_bytes")?;
    pad(&mut out, &header.reserved, 44, "reserved")?;
    let nr = header.num_records as i64;
    pad(&mut out, &numeric_text(&header.raw[1], nr, || Ok(nr.to_string()))?, 8, "num_records")?;
    let dur = header.record_duration;
    pad(&mut out, &numeric_text(&header.raw[2], dur, || format_real(dur, 8, "record_duration"))?, 8, "record_duration")?;
    pad(&mut out, &numeric_text(&header.raw[3], ns, || Ok(ns.to_string()))?, 4, "num_signals")?;

    let sig = &header.signals;
    for s in sig {
        pad(&mut out, &s.label, 16, "label")?;
    }
    for s in sig {
        pad(&mut out, &s.transducer, 80, "transducer")?;
    }
    for s in sig {
        pad(&mut out, &s.physical_dimension, 8, "physical_dimension")?;
    }
    for s in sig {
        let t = numeric_text(&s.raw[0], s.physical_min, || format_real(s.physical_min, 8, "physical_min"))?;
        pad(&mut out, &t, 8, "physical_min")?;
    }
    for s in sig {
        let t = numeric_text(&s.raw[1], s.physical_max, || format_real(s.physical_max, 8, "physical_max"))?;
        pad(&mut out, &t, 8, "physical_max")?;
    }
    for s in sig {
        let t = numeric_text(&s.raw[2], s.digital_min as i64, || Ok(s.digital_min.to_string()))?;
        pad(&mut out, &t, 8, "digital_min")?;
    }
    for s in sig {
        let t = numeric_text(&s.raw[3], s.digital_max as i64, || Ok(s.digital_max.to_string()))?;
        pad(&mut out, &t, 8, "digital_max")?;
    }
    for s in sig {
        pad(&mut out, &s.prefiltering, 80, "prefiltering")?;
    }
    for s in sig {
        let spr = s.samples_per_record as i64;
        let t = numeric_text(&s.raw[4], spr, || Ok(spr.to_string()))?;
        pad(&mut out, &t, 8, "samples_per_record")?;
    }
    for s in sig {
        pad(&mut out, &s.reserved, 32, "signal_reserved")?;
    }

    for r in 0..header.num_records {
        for (i, (s, t)) in sig.iter().zip(traces).enumerate() {
            let start = r * s.samples_per_record;
            for (j, &v) in t.samples[start..start + s.samples_per_record].iter().enumerate() {
                let d = s
                    .to_digital(v)
                    .filter(|_| v.is_finite())
                    .ok_or(EdfError::RangeOverflow { signal: i, index: start + j, value: v })?;
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(out)
}
