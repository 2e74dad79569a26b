use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::AnalysisError;
use crate::synth::HomodyneTrace;

/// Trial-averaged periodogram on bins `0..=segment/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub freq_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub n_segments: usize,
}

/// Splits each trace into non-overlapping rectangular segments, removes each
/// segment's mean, and averages `|X_k|² / segment` over all segments.
pub fn average_periodogram(traces: &[HomodyneTrace], segment: usize) -> Result<Periodogram, AnalysisError> {
    let first = traces.first().ok_or(AnalysisError::InsufficientData(0))?;
    if segment < 2 {
        return Err(AnalysisError::Input("segment must hold at least 2 samples".into()));
    }
    if traces.iter().any(|t| t.sample_rate != first.sample_rate) {
        return Err(AnalysisError::Input("mixed sample rates".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let half = segment / 2 + 1;
    let per_trace: Vec<(Vec<f64>, usize)> = traces
        .par_iter()
        .map(|t| {
            let mut acc = vec![0.0; half];
            let mut count = 0;
            for seg in t.samples.chunks_exact(segment) {
                let mean = seg.iter().sum::<f64>() / segment as f64;
                let mut buf: Vec<Complex64> = seg.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
                fft.process(&mut buf);
                for (a, c) in acc.iter_mut().zip(&buf) {
                    *a += c.norm_sqr() / segment as f64;
                }
                count += 1;
            }
            (acc, count)
        })
        .collect();
    let mut power = vec![0.0; half];
    let mut n_segments = 0;
    for (acc, c) in &per_trace {
        for (p, a) in power.iter_mut().zip(acc) {
            *p += a;
        }
        n_segments += c;
    }
    if n_segments == 0 {
        return Err(AnalysisError::Input("traces shorter than one segment".into()));
    }
    power.iter_mut().for_each(|p| *p /= n_segments as f64);
    let freq_hz = (0..half).map(|k| k as f64 * first.sample_rate / segment as f64).collect();
    Ok(Periodogram { freq_hz, power, n_segments })
}
