//! Apnea-severity classification from single-lead ECG event windows.

pub mod dsp;
pub mod harness;
pub mod hrv;
pub mod signal_io;
pub mod svm;
