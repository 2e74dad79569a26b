use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Nonnegative frequencies of the DFT bins `0..=n/2` of an `n`-sample record.
pub fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    (0..=n / 2).map(|k| k as f64 * sample_rate / n as f64).collect()
}

/// Circular zero-phase filtering of real records of a fixed length.
#[derive(Clone)]
pub struct Shaper {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Shaper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Shaper").field("n", &self.n).finish()
    }
}

impl Shaper {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Multiplies a spectrum by real per-bin gains given on bins `0..=n/2`
    /// (mirrored onto the negative frequencies) and returns the real part of
    /// the normalized inverse transform.
    pub fn inverse_with_gains(&self, spectrum: &[Complex64], half_gains: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = spectrum.iter().enumerate().map(|(k, c)| c * half_gains[k.min(n - k)]).collect();
        self.inv.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// `x` filtered with real zero-phase gains on bins `0..=n/2`.
    pub fn filter(&self, x: &[f64], half_gains: &[f64]) -> Vec<f64> {
        self.inverse_with_gains(&self.forward(x), half_gains)
    }
}
