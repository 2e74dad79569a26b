use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};

use super::shaping::{bin_frequencies, Shaper};
use super::{HomodyneTrace, SynthError};
use crate::from_db;
use crate::rng::{normals, stream, Domain};

/// Highest allowed spike-line frequency (Hz).
pub const SPIKE_LIMIT_HZ: f64 = 700e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeLine {
    pub freq_hz: f64,
    /// Power relative to a full-scale sine (dB).
    pub power_db: f64,
}

/// Detector and LO non-idealities. A level of `-inf` dB, a zero drift sigma,
/// `adc_bits = None` and an empty spike list each disable that element.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionBudget {
    /// Standard deviation of the per-measurement LO power drift (dB).
    pub lo_drift_db_sigma: f64,
    /// Common-mode rejection of the balanced detector (dB).
    pub cmrr_db: f64,
    /// LO classical intensity noise over shot noise inside `lo_band_hz` (dB).
    pub lo_classical_excess_db: f64,
    pub lo_band_hz: (f64, f64),
    pub adc_bits: Option<u32>,
    /// White electronic noise relative to shot noise (dB).
    pub electronic_floor_db: f64,
    pub spike_lines: Vec<SpikeLine>,
}

impl Default for ImperfectionBudget {
    fn default() -> Self {
        Self {
            lo_drift_db_sigma: 0.004,
            cmrr_db: -58.0,
            lo_classical_excess_db: 3.0,
            lo_band_hz: (1e6, 2e6),
            adc_bits: Some(8),
            electronic_floor_db: -10.0,
            spike_lines: [150e3, 350e3, 550e3].iter().map(|&f| SpikeLine { freq_hz: f, power_db: -45.0 }).collect(),
        }
    }
}

impl ImperfectionBudget {
    pub fn ideal() -> Self {
        Self {
            lo_drift_db_sigma: 0.0,
            cmrr_db: f64::NEG_INFINITY,
            lo_classical_excess_db: 0.0,
            lo_band_hz: (1e6, 2e6),
            adc_bits: None,
            electronic_floor_db: f64::NEG_INFINITY,
            spike_lines: Vec::new(),
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.lo_drift_db_sigma == 0.0
            && self.lo_leak_level() == 0.0
            && self.floor_level() == 0.0
            && self.adc_bits.is_none()
            && self.spike_lines.is_empty()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::Parameter(m));
        if !(self.lo_drift_db_sigma >= 0.0 && self.lo_drift_db_sigma.is_finite()) {
            return err(format!("drift sigma {} must be finite and >= 0", self.lo_drift_db_sigma));
        }
        if self.cmrr_db.is_nan() || self.cmrr_db == f64::INFINITY || !self.lo_classical_excess_db.is_finite() {
            return err("LO noise levels must be finite (or -inf to disable)".into());
        }
        if self.electronic_floor_db.is_nan() || self.electronic_floor_db == f64::INFINITY {
            return err("electronic floor must be finite (or -inf to disable)".into());
        }
        if !(self.lo_band_hz.0 >= 0.0 && self.lo_band_hz.1 > self.lo_band_hz.0) {
            return err("LO noise band must be a nonempty nonnegative interval".into());
        }
        if let Some(b) = self.adc_bits {
            if !(1..=52).contains(&b) {
                return err(format!("adc bits {b} outside 1..=52"));
            }
        }
        for s in &self.spike_lines {
            if !(s.freq_hz > 0.0 && s.freq_hz < SPIKE_LIMIT_HZ) {
                return err(format!("spike frequency {} outside (0, {SPIKE_LIMIT_HZ}) Hz", s.freq_hz));
            }
            if !s.power_db.is_finite() {
                return err("spike power must be finite".into());
            }
        }
        Ok(())
    }

    /// LO classical noise reaching the output, relative to shot noise.
    pub fn lo_leak_level(&self) -> f64 {
        from_db(self.cmrr_db + self.lo_classical_excess_db)
    }

    pub fn floor_level(&self) -> f64 {
        from_db(self.electronic_floor_db)
    }

    /// Nominal full scale used to set spike amplitudes: five times the RMS of
    /// shot noise plus electronic floor.
    pub fn nominal_full_scale(&self) -> f64 {
        5.0 * (1.0 + self.floor_level()).sqrt()
    }

    /// Expected variance added on top of the (drift-scaled) optical signal
    /// by the additive elements, per sample.
    pub fn additive_variance(&self, sample_rate: f64) -> f64 {
        let (lo, hi) = self.lo_band_hz;
        let band_frac = ((hi.min(sample_rate / 2.0) - lo).max(0.0)) / (sample_rate / 2.0);
        let fs = self.nominal_full_scale();
        let spikes: f64 = self.spike_lines.iter().map(|s| 0.5 * (fs * from_db(s.power_db / 2.0)).powi(2)).sum();
        self.lo_leak_level() * band_frac + self.floor_level() + spikes
    }
}

/// Random-stream coordinates of one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectionKey {
    pub root_seed: u64,
    /// Sequence stream identifier (see [`crate::rng`]).
    pub stream_id: u64,
    /// Measurement index; the LO drift is constant within a measurement.
    pub measurement: u64,
    pub drift_tag: u64,
    /// ADC full scale; `None` uses five times the RMS of the trace.
    pub full_scale: Option<f64>,
}

/// Applies, in order: LO classical noise and LO power drift, electronic
/// floor and spike lines, and mid-rise quantization with clipping.
pub fn apply_imperfections(
    trace: &HomodyneTrace,
    budget: &ImperfectionBudget,
    key: &ImperfectionKey,
) -> Result<HomodyneTrace, SynthError> {
    if budget.is_ideal() {
        return Ok(trace.clone());
    }
    let shaper = Shaper::new(trace.len());
    apply_with(trace, budget, key, &shaper)
}

pub(crate) fn apply_with(
    trace: &HomodyneTrace,
    budget: &ImperfectionBudget,
    key: &ImperfectionKey,
    shaper: &Shaper,
) -> Result<HomodyneTrace, SynthError> {
    budget.validate()?;
    if budget.is_ideal() {
        return Ok(trace.clone());
    }
    let n = trace.len();
    let fs = trace.sample_rate;
    let mut x = trace.samples.clone();
    let det = normals(key.root_seed, Domain::Detector, key.stream_id, 2 * n);
    let (lo_noise, floor_noise) = det.split_at(n);

    let lo_level = budget.lo_leak_level();
    if lo_level > 0.0 {
        let (f_lo, f_hi) = budget.lo_band_hz;
        let amp = lo_level.sqrt();
        let gains: Vec<f64> =
            bin_frequencies(n, fs).iter().map(|&f| if f >= f_lo && f <= f_hi { amp } else { 0.0 }).collect();
        for (v, e) in x.iter_mut().zip(shaper.filter(lo_noise, &gains)) {
            *v += e;
        }
    }
    if budget.lo_drift_db_sigma > 0.0 {
        let mut rng = stream(key.root_seed, Domain::Drift, (key.drift_tag << 32) | (key.measurement & 0xFFFF_FFFF));
        let db: f64 = Normal::new(0.0, budget.lo_drift_db_sigma).expect("sigma validated").sample(&mut rng);
        let gain = from_db(db / 2.0);
        x.iter_mut().for_each(|v| *v *= gain);
    }
    let floor = budget.floor_level();
    if floor > 0.0 {
        let a = floor.sqrt();
        for (v, e) in x.iter_mut().zip(floor_noise) {
            *v += a * e;
        }
    }
    let fs_nominal = budget.nominal_full_scale();
    for s in &budget.spike_lines {
        let a = fs_nominal * from_db(s.power_db / 2.0);
        let w = 2.0 * PI * s.freq_hz / fs;
        for (i, v) in x.iter_mut().enumerate() {
            *v += a * (w * i as f64).sin();
        }
    }
    if let Some(bits) = budget.adc_bits {
        let full = match key.full_scale {
            Some(f) => f,
            None => 5.0 * (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt(),
        };
        quantize(&mut x, bits, full);
    }
    Ok(HomodyneTrace { samples: x, ..trace.clone() })
}

/// Mid-rise uniform quantizer over `[-full_scale, full_scale]`, saturating.
pub fn quantize(x: &mut [f64], bits: u32, full_scale: f64) {
    if !(full_scale > 0.0) {
        return;
    }
    let levels = 2f64.powi(bits as i32);
    let step = 2.0 * full_scale / levels;
    let kmax = levels / 2.0 - 1.0;
    for v in x.iter_mut() {
        let k = (*v / step).floor().clamp(-levels / 2.0, kmax);
        *v = (k + 0.5) * step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantizer_levels_are_mid_rise_and_saturate() {
        let mut x = vec![0.0, 0.01, -0.01, 10.0, -10.0];
        quantize(&mut x, 2, 1.0);
        assert_eq!(x, vec![0.25, 0.25, -0.25, 0.75, -0.75]);
    }

    #[test]
    fn default_budget_is_valid() {
        ImperfectionBudget::default().validate().unwrap();
        assert!(ImperfectionBudget::ideal().is_ideal());
    }

    #[test]
    fn spike_above_limit_rejected() {
        let mut b = ImperfectionBudget::default();
        b.spike_lines.push(SpikeLine { freq_hz: 800e3, power_db: -40.0 });
        assert!(b.validate().is_err());
    }
}
