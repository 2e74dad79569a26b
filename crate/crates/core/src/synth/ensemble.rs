use rayon::prelude::*;

use super::imperfections::apply_with;
use super::operator::SequenceOperator;
use super::shaping::Shaper;
use super::{HomodyneTrace, ImperfectionBudget, ImperfectionKey, Scenario, SynthError};
use crate::rng::{normals, Domain};

/// A run of sequences sharing one operator. Sequence `i` belongs to
/// measurement `i / sequences_per_measurement` and draws its optical noise
/// from optical stream `first_stream + i`, so runs with equal root seeds and
/// stream ranges share their white noise.
#[derive(Debug, Clone)]
pub struct Ensemble<'a> {
    pub operator: &'a SequenceOperator,
    pub budget: &'a ImperfectionBudget,
    pub root_seed: u64,
    pub first_stream: u64,
    pub n_sequences: usize,
    pub sequences_per_measurement: u64,
    pub sample_rate: f64,
    pub lo_phase: f64,
    pub scenario: Scenario,
    pub t0_offset: f64,
    pub drift_tag: u64,
    /// ADC full scale shared by every trace of the run. `None` derives it from
    /// the expected composite variance.
    pub full_scale: Option<f64>,
}

impl Ensemble<'_> {
    /// Full scale at five times the expected RMS of the composite signal.
    pub fn expected_full_scale(&self) -> f64 {
        let v = self.operator.mean_sample_variance() + self.budget.additive_variance(self.sample_rate);
        5.0 * v.sqrt()
    }

    fn trace_with(&self, i: usize, shaper: &Shaper) -> Result<HomodyneTrace, SynthError> {
        let id = self.first_stream + i as u64;
        let w = normals(self.root_seed, Domain::Optical, id, self.operator.len());
        let trace = HomodyneTrace {
            sample_rate: self.sample_rate,
            samples: self.operator.apply(&w),
            lo_phase: self.lo_phase,
            scenario: self.scenario,
            seed: self.root_seed,
            t0_offset: self.t0_offset,
        };
        let key = ImperfectionKey {
            root_seed: self.root_seed,
            stream_id: id,
            measurement: id / self.sequences_per_measurement.max(1),
            drift_tag: self.drift_tag,
            full_scale: Some(self.full_scale.unwrap_or_else(|| self.expected_full_scale())),
        };
        apply_with(&trace, self.budget, &key, shaper)
    }

    /// Trace of sequence `i`.
    pub fn trace(&self, i: usize) -> Result<HomodyneTrace, SynthError> {
        self.trace_with(i, &Shaper::new(self.operator.len()))
    }

    /// Maps every sequence in parallel; results come back in sequence order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>, SynthError>
    where
        T: Send,
        F: Fn(usize, &HomodyneTrace) -> T + Sync + Send,
    {
        let shaper = Shaper::new(self.operator.len());
        let fixed =
            Self { full_scale: Some(self.full_scale.unwrap_or_else(|| self.expected_full_scale())), ..self.clone() };
        (0..self.n_sequences).into_par_iter().map(|i| fixed.trace_with(i, &shaper).map(|t| f(i, &t))).collect()
    }

    pub fn collect(&self) -> Result<Vec<HomodyneTrace>, SynthError> {
        self.map(|_, t| t.clone())
    }
}
