use std::f64::consts::PI;

use rayon::prelude::*;

use super::{error_bars, AnalysisError, NoiseEstimate};
use crate::synth::HomodyneTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Method1Config {
    /// Window length (s).
    pub window: f64,
    pub band_hz: (f64, f64),
}

impl Default for Method1Config {
    fn default() -> Self {
        Self { window: 640e-9, band_hz: (1e6, 2e6) }
    }
}

/// Partition of a record into consecutive rectangular windows and the DFT
/// bins that fall inside the analysis band. Samples after the last full
/// window are discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub sample_rate: f64,
    pub n_per_window: usize,
    pub n_windows: usize,
    pub remainder: usize,
    pub bins: Vec<usize>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl WindowPlan {
    pub fn new(sample_rate: f64, n_samples: usize, cfg: &Method1Config) -> Result<Self, AnalysisError> {
        if !(sample_rate > 0.0 && cfg.window > 0.0) {
            return Err(AnalysisError::Input("sample rate and window must be > 0".into()));
        }
        let m = (cfg.window * sample_rate).round() as usize;
        if m < 2 {
            return Err(AnalysisError::Input(format!("window of {m} samples")));
        }
        let (lo, hi) = cfg.band_hz;
        let bins: Vec<usize> = (1..=m / 2)
            .filter(|&k| {
                let f = k as f64 * sample_rate / m as f64;
                f >= lo && f <= hi
            })
            .collect();
        if bins.is_empty() {
            return Err(AnalysisError::Band { lo, hi, n: m });
        }
        let n_windows = n_samples / m;
        if n_windows == 0 {
            return Err(AnalysisError::Input(format!("record of {n_samples} samples shorter than one window")));
        }
        let table = |f: fn(f64) -> f64| -> Vec<Vec<f64>> {
            bins.iter().map(|&k| (0..m).map(|j| f(2.0 * PI * (k * j % m) as f64 / m as f64)).collect()).collect()
        };
        Ok(Self {
            sample_rate,
            n_per_window: m,
            n_windows,
            remainder: n_samples - n_windows * m,
            cos: table(f64::cos),
            sin: table(f64::sin),
            bins,
        })
    }

    pub fn bin_frequencies(&self) -> Vec<f64> {
        self.bins.iter().map(|&k| k as f64 * self.sample_rate / self.n_per_window as f64).collect()
    }

    /// Centre time of window `j` for a record starting at `t0_offset`.
    pub fn window_center(&self, j: usize, t0_offset: f64) -> f64 {
        t0_offset + (j as f64 + 0.5) * self.n_per_window as f64 / self.sample_rate
    }

    /// Real Gaussian degrees of freedom contributed by one window.
    pub fn dof_per_window(&self) -> usize {
        self.bins.iter().map(|&k| if 2 * k == self.n_per_window { 1 } else { 2 }).sum()
    }

    /// Band-averaged periodogram `|X_k|²/m` of each mean-subtracted window.
    pub fn window_powers(&self, x: &[f64]) -> Vec<f64> {
        let m = self.n_per_window;
        (0..self.n_windows)
            .map(|w| {
                let seg = &x[w * m..(w + 1) * m];
                let mean = seg.iter().sum::<f64>() / m as f64;
                let mut acc = 0.0;
                for b in 0..self.bins.len() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (j, v) in seg.iter().enumerate() {
                        let d = v - mean;
                        re += d * self.cos[b][j];
                        im -= d * self.sin[b][j];
                    }
                    acc += (re * re + im * im) / m as f64;
                }
                acc / self.bins.len() as f64
            })
            .collect()
    }

    /// Per-window complex weight vectors `(Re, Im)` of bin `bins[b]` laid
    /// out over a record of `n_samples`, including the mean subtraction.
    /// `E[P] = (E[(reᵀx)²] + E[(imᵀx)²]) / m` for each window.
    pub fn window_weights(&self, window: usize, b: usize, n_samples: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.n_per_window;
        let (mut re, mut im) = (vec![0.0; n_samples], vec![0.0; n_samples]);
        let mc = self.cos[b].iter().sum::<f64>() / m as f64;
        let ms = self.sin[b].iter().sum::<f64>() / m as f64;
        for j in 0..m {
            re[window * m + j] = self.cos[b][j] - mc;
            im[window * m + j] = -(self.sin[b][j] - ms);
        }
        (re, im)
    }
}

/// Per-window running sums of band powers over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSums {
    pub sums: Vec<f64>,
    pub n_trials: usize,
}

impl WindowSums {
    pub fn new(n_windows: usize) -> Self {
        Self { sums: vec![0.0; n_windows], n_trials: 0 }
    }

    pub fn add(&mut self, powers: &[f64]) {
        for (s, p) in self.sums.iter_mut().zip(powers) {
            *s += p;
        }
        self.n_trials += 1;
    }

    /// Ordered fold of per-trial window powers.
    pub fn from_powers<'a>(n_windows: usize, powers: impl IntoIterator<Item = &'a Vec<f64>>) -> Self {
        let mut s = Self::new(n_windows);
        for p in powers {
            s.add(p);
        }
        s
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.n_trials as f64).collect()
    }

    /// Shot-normalized estimates per window index.
    pub fn normalized(
        &self,
        shot: &WindowSums,
        plan: &WindowPlan,
        lo_drift_db_sigma: f64,
    ) -> Result<Vec<NoiseEstimate>, AnalysisError> {
        if self.n_trials < 2 || shot.n_trials < 2 {
            return Err(AnalysisError::InsufficientData(self.n_trials.min(shot.n_trials)));
        }
        if self.sums.len() != shot.sums.len() {
            return Err(AnalysisError::Input("signal and shot window counts differ".into()));
        }
        let (stat, drift) = error_bars(self.n_trials * plan.dof_per_window(), lo_drift_db_sigma)?;
        let band = plan.bin_frequencies();
        self.means()
            .iter()
            .zip(shot.means())
            .enumerate()
            .map(|(j, (s, r))| {
                if !(r > 0.0) {
                    return Err(AnalysisError::Degenerate(format!("zero shot power in window {j}")));
                }
                Ok(NoiseEstimate {
                    value_db: crate::to_db(s / r),
                    stat_err_db: stat,
                    lo_drift_err_db: drift,
                    n_trials: self.n_trials,
                    descriptor: format!("window {j} bins {band:?} Hz"),
                })
            })
            .collect()
    }
}

pub(crate) fn check_compatible(traces: &[HomodyneTrace], rate: f64, len: usize) -> Result<(), AnalysisError> {
    for t in traces {
        if t.sample_rate != rate {
            return Err(AnalysisError::Input(format!("sample rate {} differs from {rate}", t.sample_rate)));
        }
        if t.len() != len {
            return Err(AnalysisError::Input(format!("trace length {} differs from {len}", t.len())));
        }
    }
    Ok(())
}

/// Sums of window powers over a set of traces, computed in parallel and
/// folded in input order.
pub fn window_sums(traces: &[HomodyneTrace], plan: &WindowPlan) -> WindowSums {
    let powers: Vec<Vec<f64>> = traces.par_iter().map(|t| plan.window_powers(&t.samples)).collect();
    WindowSums::from_powers(plan.n_windows, &powers)
}

/// Method I timeline: per window index, trial-averaged band power of the
/// signal traces over that of the shot traces, in dB.
pub fn method1_timeline(
    traces: &[HomodyneTrace],
    shot_traces: &[HomodyneTrace],
    cfg: &Method1Config,
    lo_drift_db_sigma: f64,
) -> Result<Vec<NoiseEstimate>, AnalysisError> {
    let first = traces.first().ok_or(AnalysisError::InsufficientData(0))?;
    let (rate, len) = (first.sample_rate, first.len());
    check_compatible(traces, rate, len)?;
    check_compatible(shot_traces, rate, len)?;
    let plan = WindowPlan::new(rate, len, cfg)?;
    window_sums(traces, &plan).normalized(&window_sums(shot_traces, &plan), &plan, lo_drift_db_sigma)
}
