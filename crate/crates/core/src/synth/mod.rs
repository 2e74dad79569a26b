//! Time-domain homodyne trace synthesis.
//!
//! A trace is a linear map of one sequence's white Gaussian noise (unit
//! variance per sample, i.e. shot noise). The map is assembled from
//! stationary textures, each the white noise shaped by `sqrt(S(θ, f))`,
//! selected by hard time masks, plus a rank-one rescaling of the retrieval
//! temporal mode. See [`SequenceOperator`].

mod ensemble;
mod imperfections;
mod operator;
mod sequence;
mod shaping;
mod stationary;

use thiserror::Error;

use crate::medium::MediumError;
use crate::spectra::SpectrumError;
use crate::storage::StorageError;

pub use ensemble::Ensemble;
pub use imperfections::{apply_imperfections, ImperfectionBudget, ImperfectionKey, SpikeLine};
pub use operator::SequenceOperator;
pub use sequence::{build_sequence_operator, drift_tag, synth_sequence, SequenceSetup};
pub use shaping::{bin_frequencies, Shaper};
pub use stationary::{stationary_operator, synth_stationary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis parameter: {0}")]
    Parameter(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// Experimental configuration a trace was recorded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// LO only; the shot-noise reference.
    Vacuum,
    /// Source pulse without atoms.
    SourceOnly,
    /// Pulse delayed through the EIT medium with the control left on.
    EitDelay,
    /// Control switched off at `t_off` and back on at `t_on`.
    StoreRetrieve,
}

impl Scenario {
    pub fn code(self) -> u32 {
        match self {
            Scenario::Vacuum => 0,
            Scenario::SourceOnly => 1,
            Scenario::EitDelay => 2,
            Scenario::StoreRetrieve => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => Scenario::Vacuum,
            1 => Scenario::SourceOnly,
            2 => Scenario::EitDelay,
            3 => Scenario::StoreRetrieve,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Vacuum => "vacuum",
            Scenario::SourceOnly => "source",
            Scenario::EitDelay => "delayed",
            Scenario::StoreRetrieve => "store_retrieve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneTrace {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    /// LO phase θ (rad).
    pub lo_phase: f64,
    pub scenario: Scenario,
    pub seed: u64,
    /// Time of the first sample relative to the control switch-off (s).
    pub t0_offset: f64,
}

impl HomodyneTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0_offset + i as f64 / self.sample_rate
    }
}

/// Timing of one pulse sequence; times are relative to the control switch-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    pub pulse_len: f64,
    /// Power fraction of the source leaking outside the pulse.
    pub tail_leak: f64,
    pub t_off: f64,
    pub t_on: f64,
    pub sequence_len: f64,
    pub sequences_per_measurement: u64,
    pub n_measurements: u64,
    /// Start of the recorded trace.
    pub trace_start: f64,
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::Schedule(m));
        if !(self.pulse_len > 0.0 && self.pulse_len < self.sequence_len) {
            return err(format!("pulse length {} must be in (0, sequence length)", self.pulse_len));
        }
        if !(0.0..1.0).contains(&self.tail_leak) {
            return err(format!("tail leak {} outside [0, 1)", self.tail_leak));
        }
        if !(self.t_on > self.t_off) {
            return err(format!("t_on {} must exceed t_off {}", self.t_on, self.t_off));
        }
        if self.sequences_per_measurement == 0 || self.n_measurements == 0 {
            return err("sequence counts must be positive".into());
        }
        if self.t_off - self.pulse_len < self.trace_start {
            return err("trace starts after the input pulse".into());
        }
        if self.t_on >= self.trace_start + self.sequence_len {
            return err("trace ends before the control is switched back on".into());
        }
        Ok(())
    }

    pub fn n_sequences(&self) -> u64 {
        self.sequences_per_measurement * self.n_measurements
    }

    /// Number of samples in one trace.
    pub fn n_samples(&self, sample_rate: f64) -> usize {
        (self.sequence_len * sample_rate).round() as usize
    }
}
