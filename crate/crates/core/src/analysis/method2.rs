use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::{error_bars, sample_variance, AnalysisError, NoiseEstimate};
use crate::synth::HomodyneTrace;

/// Exponential temporal mode `f(t - t0) = exp(-(t - t0)/τ)` integrated over
/// `[t0, t0 + window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    pub tau: f64,
    /// Start time relative to the control switch-off (s).
    pub t0: f64,
    pub window: f64,
    /// DFT bins of the segment removed before projection.
    pub excluded_bins: Vec<usize>,
}

impl ModeFunction {
    pub fn new(tau: f64, t0: f64, window: f64) -> Self {
        Self { tau, t0, window, excluded_bins: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.tau > 0.0 && self.window > 0.0 && self.t0.is_finite()) {
            return Err(AnalysisError::Input("mode tau and window must be > 0".into()));
        }
        Ok(())
    }

    pub fn descriptor(&self) -> String {
        format!("mode tau {} s t0 {} s window {} s", self.tau, self.t0, self.window)
    }
}

/// Precomputed projection weights for one mode on one sampling grid.
///
/// The weights are the trapezoid-rule samples of `f(t - t0) Δt`; removing
/// DFT bins from the segment is a symmetric projection, so it is applied to
/// the weights once instead of to every segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProjector {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl ModeProjector {
    pub fn new(mode: &ModeFunction, sample_rate: f64, t0_offset: f64, n_samples: usize) -> Result<Self, AnalysisError> {
        mode.validate()?;
        let dt = 1.0 / sample_rate;
        let start = ((mode.t0 - t0_offset) * sample_rate).round() as i64;
        let len = (mode.window * sample_rate).round() as usize + 1;
        if start < 0 || start as usize + len > n_samples {
            return Err(AnalysisError::Range { start, end: start + len as i64, len: n_samples });
        }
        let mut w: Vec<f64> = (0..len).map(|k| (-(k as f64) * dt / mode.tau).exp() * dt).collect();
        if len > 1 {
            w[0] *= 0.5;
            w[len - 1] *= 0.5;
        }
        if !mode.excluded_bins.is_empty() {
            let mut planner = FftPlanner::new();
            let mut buf: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            planner.plan_fft_forward(len).process(&mut buf);
            for &k in &mode.excluded_bins {
                let k = k % len;
                buf[k] = Complex64::new(0.0, 0.0);
                buf[(len - k) % len] = Complex64::new(0.0, 0.0);
            }
            planner.plan_fft_inverse(len).process(&mut buf);
            w = buf.iter().map(|c| c.re / len as f64).collect();
        }
        Ok(Self { start: start as usize, weights: w })
    }

    pub fn for_trace(trace: &HomodyneTrace, mode: &ModeFunction) -> Result<Self, AnalysisError> {
        Self::new(mode, trace.sample_rate, trace.t0_offset, trace.len())
    }

    pub fn project(&self, x: &[f64]) -> f64 {
        x[self.start..self.start + self.weights.len()].iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    /// Weights laid out over a full record of `n` samples.
    pub fn full_weights(&self, n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        u[self.start..self.start + self.weights.len()].copy_from_slice(&self.weights);
        u
    }

    /// `Σ w_k²`: the variance of `q` for unit white noise.
    pub fn white_variance(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Quadrature sample of one trace in the given mode.
pub fn method2_project(trace: &HomodyneTrace, mode: &ModeFunction) -> Result<f64, AnalysisError> {
    Ok(ModeProjector::for_trace(trace, mode)?.project(&trace.samples))
}

fn projections(traces: &[HomodyneTrace], mode: &ModeFunction) -> Result<Vec<f64>, AnalysisError> {
    traces.par_iter().map(|t| method2_project(t, mode)).collect()
}

/// Shot-normalized variance of the mode quadrature from already projected
/// samples.
pub fn variance_estimate(
    q: &[f64],
    q_shot: &[f64],
    descriptor: String,
    lo_drift_db_sigma: f64,
) -> Result<NoiseEstimate, AnalysisError> {
    if q.len() < 2 || q_shot.len() < 2 {
        return Err(AnalysisError::InsufficientData(q.len().min(q_shot.len())));
    }
    let shot = sample_variance(q_shot);
    if !(shot > 0.0) {
        return Err(AnalysisError::Degenerate("zero shot-noise variance".into()));
    }
    let (stat, drift) = error_bars(q.len(), lo_drift_db_sigma)?;
    Ok(NoiseEstimate {
        value_db: crate::to_db(sample_variance(q) / shot),
        stat_err_db: stat,
        lo_drift_err_db: drift,
        n_trials: q.len(),
        descriptor,
    })
}

/// Running mean and squared deviation (Welford) of mode quadratures, one
/// slot per mode. Trials must be added in a fixed order for bit-stable
/// results.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSums {
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
    pub n_trials: usize,
}

impl ModeSums {
    pub fn new(n_modes: usize) -> Self {
        Self { mean: vec![0.0; n_modes], m2: vec![0.0; n_modes], n_trials: 0 }
    }

    pub fn add(&mut self, q: &[f64]) {
        self.n_trials += 1;
        let n = self.n_trials as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(q) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    /// Unbiased sample variance per mode.
    pub fn variances(&self) -> Vec<f64> {
        self.m2.iter().map(|s| s / (self.n_trials as f64 - 1.0)).collect()
    }

    pub fn normalized(
        &self,
        shot: &ModeSums,
        descriptors: &[String],
        lo_drift_db_sigma: f64,
    ) -> Result<Vec<NoiseEstimate>, AnalysisError> {
        if self.n_trials < 2 || shot.n_trials < 2 {
            return Err(AnalysisError::InsufficientData(self.n_trials.min(shot.n_trials)));
        }
        if self.mean.len() != shot.mean.len() || descriptors.len() != self.mean.len() {
            return Err(AnalysisError::Input("signal, shot and descriptor mode counts differ".into()));
        }
        let (stat, drift) = error_bars(self.n_trials, lo_drift_db_sigma)?;
        self.variances()
            .iter()
            .zip(shot.variances())
            .zip(descriptors)
            .map(|((v, r), d)| {
                if !(r > 0.0) {
                    return Err(AnalysisError::Degenerate(format!("zero shot-noise variance for {d}")));
                }
                Ok(NoiseEstimate {
                    value_db: crate::to_db(v / r),
                    stat_err_db: stat,
                    lo_drift_err_db: drift,
                    n_trials: self.n_trials,
                    descriptor: d.clone(),
                })
            })
            .collect()
    }
}

/// Method II: sample variance over trials of the mode quadrature, divided by
/// the same statistic on the shot traces, in dB.
pub fn method2_variance(
    traces: &[HomodyneTrace],
    shot_traces: &[HomodyneTrace],
    mode: &ModeFunction,
    lo_drift_db_sigma: f64,
) -> Result<NoiseEstimate, AnalysisError> {
    if traces.len() < 2 || shot_traces.len() < 2 {
        return Err(AnalysisError::InsufficientData(traces.len().min(shot_traces.len())));
    }
    let rate = traces[0].sample_rate;
    if traces.iter().chain(shot_traces).any(|t| t.sample_rate != rate) {
        return Err(AnalysisError::Input("mixed sample rates".into()));
    }
    variance_estimate(
        &projections(traces, mode)?,
        &projections(shot_traces, mode)?,
        mode.descriptor(),
        lo_drift_db_sigma,
    )
}
