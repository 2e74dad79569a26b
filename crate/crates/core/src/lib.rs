//! Simulation core for squeezed-vacuum propagation, delay and storage in an
//! EIT medium, and the homodyne noise estimators used to read it out.
//!
//! Layout:
//! - [`spectra`]: Gaussian quadrature noise spectra and linear channels acting on them.
//! - [`medium`] / [`storage`]: EIT transfer function and the storage/retrieval channel.
//! - [`synth`]: time-domain homodyne trace synthesis, including detector imperfections.
//! - [`analysis`]: windowed (Method I) and mode-matched (Method II) noise estimators.
//! - [`io`]: binary trace container and CSV tables.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod expectation;
pub mod io;
pub mod medium;
pub mod rng;
pub mod spectra;
pub mod storage;
pub mod synth;

pub use analysis::{error_bars, ModeFunction, NoiseEstimate};
pub use medium::{EitMedium, MediumError};
pub use spectra::{OpoSource, QuadSpectrum, SpectrumError, Transfer};
pub use storage::{StorageChannel, StorageError};
pub use synth::{HomodyneTrace, ImperfectionBudget, PulseSchedule, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Decibel value of a linear power ratio.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Linear power ratio from decibels.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
