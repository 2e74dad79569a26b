//! Phenomenological storage and retrieval: an exponentially decaying
//! retrieval efficiency and a fixed exponential retrieval temporal mode.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::spectra::{QuadSpectrum, SpectrumError};

/// Memory decay time for which the retrieval efficiency halves every 2 µs.
pub const HALVING_DECAY_TIME: f64 = 2e-6 / LN_2;

/// Full width at half maximum (Hz) of the retrieval mode's Lorentzian
/// frequency weight.
pub const MODE_LORENTZIAN_FWHM: f64 = 640e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StorageError {
    #[error("invalid channel parameter: {0}")]
    Parameter(String),
    #[error("flux ratio target {target} unreachable: at most {max} with unit efficiency")]
    Infeasible { target: f64, max: f64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageChannel {
    /// Retrieval efficiency extrapolated to zero storage time.
    pub eta0: f64,
    /// Memory decay time τ_mem (s).
    pub decay_time: f64,
    /// Decay time of the retrieved temporal mode (s).
    pub retrieval_tau: f64,
    /// Control switch-off time (s).
    pub t_off: f64,
    /// Control switch-on time (s).
    pub t_on: f64,
}

impl StorageChannel {
    pub fn validate(&self) -> Result<(), StorageError> {
        if !(0.0..=1.0).contains(&self.eta0) {
            return Err(StorageError::Parameter(format!("eta0 {} outside [0, 1]", self.eta0)));
        }
        if !(self.decay_time > 0.0 && self.decay_time.is_finite()) {
            return Err(StorageError::Parameter("decay time must be > 0".into()));
        }
        if !(self.retrieval_tau > 0.0 && self.retrieval_tau.is_finite()) {
            return Err(StorageError::Parameter("retrieval mode tau must be > 0".into()));
        }
        if !(self.t_on > self.t_off) {
            return Err(StorageError::Parameter(format!("t_on {} must exceed t_off {}", self.t_on, self.t_off)));
        }
        Ok(())
    }

    pub fn storage_time(&self) -> f64 {
        self.t_on - self.t_off
    }

    /// Retrieval efficiency after storing for `t_s` seconds.
    pub fn efficiency(&self, t_s: f64) -> f64 {
        self.eta0 * (-t_s / self.decay_time).exp()
    }

    /// Unit-normalized retrieval mode `sqrt(2/τ) exp(-(t - t_on)/τ)`, zero before `t_on`.
    pub fn retrieval_mode(&self, t: f64) -> f64 {
        if t < self.t_on {
            0.0
        } else {
            (2.0 / self.retrieval_tau).sqrt() * (-(t - self.t_on) / self.retrieval_tau).exp()
        }
    }

    /// Retrieval mode sampled at `t_start + k dt`, `k < n`, rescaled so that
    /// the trapezoid rule gives `∫ g² dt = 1` on that grid.
    pub fn retrieval_mode_samples(&self, t_start: f64, dt: f64, n: usize) -> Vec<f64> {
        let mut g: Vec<f64> = (0..n).map(|k| self.retrieval_mode(t_start + k as f64 * dt)).collect();
        let norm = trapezoid_square(&g, dt).sqrt();
        if norm > 0.0 {
            g.iter_mut().for_each(|v| *v /= norm);
        }
        g
    }
}

/// Trapezoid-rule integral of `x²` for samples spaced by `dt`.
pub fn trapezoid_square(x: &[f64], dt: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let inner: f64 = x.iter().map(|v| v * v).sum();
    dt * (inner - 0.5 * (x[0] * x[0] + x[x.len() - 1] * x[x.len() - 1]))
}

/// Calibrates `eta0` so that `ratio_model(η(t_s))` equals `flux_ratio_target`,
/// where `t_s = t_on - t_off` and `ratio_model` maps the retrieval efficiency
/// at that storage time to the observed peak retrieved / peak delayed flux
/// ratio. The model must be nondecreasing in efficiency.
pub fn storage_channel(
    template: StorageChannel,
    flux_ratio_target: f64,
    ratio_model: impl Fn(f64) -> f64,
) -> Result<StorageChannel, StorageError> {
    if !(flux_ratio_target > 0.0 && flux_ratio_target <= 1.0) {
        return Err(StorageError::Parameter(format!("flux ratio target {flux_ratio_target} outside (0, 1]")));
    }
    let mut ch = StorageChannel { eta0: 1.0, ..template };
    ch.validate()?;
    let decay = (-ch.storage_time() / ch.decay_time).exp();
    let max = ratio_model(decay);
    if max < flux_ratio_target {
        return Err(StorageError::Infeasible { target: flux_ratio_target, max });
    }
    let (mut lo, mut hi) = (0.0, decay);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio_model(mid) < flux_ratio_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ch.eta0 = (0.5 * (lo + hi) / decay).min(1.0);
    Ok(ch)
}

/// Lorentzian-weighted band averages `(S̄_min, S̄_max)` of a spectrum, with a
/// unit-normalized weight of the given FWHM centred at zero detuning. The
/// weight is normalized over the spectrum's own grid.
pub fn lorentzian_average(spec: &QuadSpectrum, fwhm_hz: f64) -> Result<(f64, f64), StorageError> {
    if !(fwhm_hz > 0.0) {
        return Err(StorageError::Parameter("Lorentzian width must be > 0".into()));
    }
    let f = spec.freq_hz();
    let w: Vec<f64> = f.iter().map(|&x| 1.0 / (1.0 + (2.0 * x / fwhm_hz).powi(2))).collect();
    let trap =
        |v: &dyn Fn(usize) -> f64| -> f64 { (1..f.len()).map(|k| 0.5 * (v(k) + v(k - 1)) * (f[k] - f[k - 1])).sum() };
    if f.len() < 2 {
        return Ok((spec.s_min()[0], spec.s_max()[0]));
    }
    let norm = trap(&|k| w[k]);
    let a = trap(&|k| w[k] * spec.s_min()[k]) / norm;
    let b = trap(&|k| w[k] * spec.s_max()[k]) / norm;
    Ok((a, b))
}

/// Single-mode variances of the retrieved state after storage time `t_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedState {
    pub v_min: f64,
    pub v_max: f64,
    pub efficiency: f64,
}

impl RetrievedState {
    pub fn at_phase(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.v_min * c * c + self.v_max * s * s
    }
}

pub fn retrieved_state(
    source: &QuadSpectrum,
    channel: &StorageChannel,
    t_s: f64,
) -> Result<RetrievedState, StorageError> {
    channel.validate()?;
    let (a, b) = lorentzian_average(source, MODE_LORENTZIAN_FWHM)?;
    Ok(retrieved_from_means(a, b, channel.efficiency(t_s)))
}

/// Retrieved variances from already band-averaged input variances.
pub fn retrieved_from_means(s_min_mean: f64, s_max_mean: f64, efficiency: f64) -> RetrievedState {
    RetrievedState {
        v_min: 1.0 + efficiency * (s_min_mean - 1.0),
        v_max: 1.0 + efficiency * (s_max_mean - 1.0),
        efficiency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(eta0: f64) -> StorageChannel {
        StorageChannel { eta0, decay_time: HALVING_DECAY_TIME, retrieval_tau: 250e-9, t_off: 0.0, t_on: 3e-6 }
    }

    #[test]
    fn zero_storage_gives_eta0() {
        assert_eq!(channel(0.37).efficiency(0.0), 0.37);
    }

    #[test]
    fn ratio_target_out_of_range() {
        for t in [0.0, -0.1, 1.5] {
            assert!(matches!(storage_channel(channel(0.0), t, |e| e), Err(StorageError::Parameter(_))));
        }
    }

    #[test]
    fn calibration_inverts_linear_model() {
        let ch = storage_channel(channel(0.0), 0.2, |e| e).unwrap();
        assert!((ch.efficiency(ch.storage_time()) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unreachable_ratio() {
        assert!(matches!(storage_channel(channel(0.0), 0.9, |e| e), Err(StorageError::Infeasible { .. })));
    }

    #[test]
    fn mode_is_zero_before_switch_on() {
        assert_eq!(channel(0.5).retrieval_mode(2.9e-6), 0.0);
    }
}
