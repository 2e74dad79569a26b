use super::operator::SequenceOperator;
use super::shaping::bin_frequencies;
use super::{HomodyneTrace, Scenario, SynthError};
use crate::rng::{normals, Domain};
use crate::spectra::{quad_at, QuadSpectrum};

/// Per-bin amplitude gains `sqrt(S(θ, f_k))` on bins `0..=n/2`, or `None`
/// when the spectrum is shot noise on every bin.
pub(crate) fn amplitude_gains(
    spec: &QuadSpectrum,
    theta: f64,
    n: usize,
    sample_rate: f64,
) -> Result<Option<Vec<f64>>, SynthError> {
    let var = bin_frequencies(n, sample_rate)
        .into_iter()
        .map(|f| quad_at(spec, theta, f))
        .collect::<Result<Vec<f64>, _>>()?;
    if var.iter().all(|&v| v == 1.0) {
        return Ok(None);
    }
    Ok(Some(var.into_iter().map(f64::sqrt).collect()))
}

/// Operator producing `n` samples of stationary noise with one-sided PSD
/// `S(θ, f)` in shot units. The spectrum must cover `[0, sample_rate/2]`.
pub fn stationary_operator(
    spec: &QuadSpectrum,
    theta: f64,
    n: usize,
    sample_rate: f64,
) -> Result<SequenceOperator, SynthError> {
    if !(sample_rate > 0.0) {
        return Err(SynthError::Parameter("sample rate must be > 0".into()));
    }
    SequenceOperator::stationary(n, amplitude_gains(spec, theta, n, sample_rate)?)
}

/// Stationary Gaussian trace shaped in the frequency domain; the noise is
/// drawn from optical stream 0 of `seed`.
pub fn synth_stationary(
    spec: &QuadSpectrum,
    theta: f64,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<HomodyneTrace, SynthError> {
    let n = (duration * sample_rate).round() as usize;
    if n == 0 {
        return Err(SynthError::Parameter(format!("duration {duration} s gives no samples")));
    }
    let op = stationary_operator(spec, theta, n, sample_rate)?;
    let w = normals(seed, Domain::Optical, 0, n);
    Ok(HomodyneTrace {
        sample_rate,
        samples: op.apply(&w),
        lo_phase: theta,
        scenario: Scenario::SourceOnly,
        seed,
        t0_offset: 0.0,
    })
}
