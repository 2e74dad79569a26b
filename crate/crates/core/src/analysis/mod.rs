//! Shot-normalized noise estimators for homodyne traces.
//!
//! - Method I ([`method1`]): band power of rectangular-window periodograms
//!   on consecutive windows, averaged over trials.
//! - Method II ([`method2`]): variance over trials of the projection onto an
//!   exponential temporal mode.

pub mod flux;
pub mod method1;
pub mod method2;
pub mod shot;
pub mod spectrum;

use thiserror::Error;

pub use flux::{flux_timeline, timeline_lag, FluxPoint};
pub use method1::{method1_timeline, Method1Config, WindowPlan, WindowSums};
pub use method2::{method2_project, method2_variance, variance_estimate, ModeFunction, ModeProjector, ModeSums};
pub use shot::{lo_drift_check, shot_calibration, ShotCalibration, ShotStatistic};
pub use spectrum::{average_periodogram, Periodogram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("band [{lo}, {hi}] Hz contains no DFT bin of a {n}-sample window")]
    Band { lo: f64, hi: f64, n: usize },
    #[error("input error: {0}")]
    Input(String),
    #[error("segment [{start}, {end}) outside trace of {len} samples")]
    Range { start: i64, end: i64, len: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: need at least 2 trials, got {0}")]
    InsufficientData(usize),
}

/// A shot-normalized noise level with its error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub value_db: f64,
    pub stat_err_db: f64,
    pub lo_drift_err_db: f64,
    pub n_trials: usize,
    /// Which band/window or mode the value refers to.
    pub descriptor: String,
}

impl NoiseEstimate {
    pub fn linear(&self) -> f64 {
        crate::from_db(self.value_db)
    }

    /// Statistical and drift errors combined in quadrature.
    pub fn total_err_db(&self) -> f64 {
        self.stat_err_db.hypot(self.lo_drift_err_db)
    }
}

/// Error bars of a normalized variance estimate from `n` Gaussian samples:
/// `ΔV/V = sqrt(2/(n-1))` expressed as `10 log10(1 + ΔV/V)`, and the LO
/// drift term passed through unchanged. Returns `(stat_err_db, lo_drift_err_db)`.
pub fn error_bars(n: usize, lo_drift_db_sigma: f64) -> Result<(f64, f64), AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::InsufficientData(n));
    }
    let rel = (2.0 / (n as f64 - 1.0)).sqrt();
    Ok((10.0 * (1.0 + rel).log10(), lo_drift_db_sigma))
}

/// Sample variance with the `n - 1` denominator.
pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_bars_need_two_samples() {
        assert_eq!(error_bars(1, 0.004), Err(AnalysisError::InsufficientData(1)));
    }

    #[test]
    fn drift_term_is_passed_through() {
        assert_eq!(error_bars(100, 0.004).unwrap().1, 0.004);
    }
}
