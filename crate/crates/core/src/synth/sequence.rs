use super::operator::{Region, SequenceOperator};
use super::stationary::amplitude_gains;
use super::{
    apply_imperfections, HomodyneTrace, ImperfectionBudget, ImperfectionKey, PulseSchedule, Scenario, SynthError,
};
use crate::medium::EitMedium;
use crate::rng::{normals, run_tag, Domain};
use crate::spectra::{apply_filter, apply_loss, QuadSpectrum};
use crate::storage::{lorentzian_average, StorageChannel, MODE_LORENTZIAN_FWHM};

/// Everything needed to synthesize pulse sequences. `source` must cover
/// `[0, sample_rate/2]`.
#[derive(Debug, Clone)]
pub struct SequenceSetup {
    pub source: QuadSpectrum,
    pub medium: EitMedium,
    pub channel: StorageChannel,
    pub schedule: PulseSchedule,
    pub sample_rate: f64,
}

impl SequenceSetup {
    pub fn n_samples(&self) -> usize {
        self.schedule.n_samples(self.sample_rate)
    }

    /// Sample index closest to time `t`, clamped to the record.
    pub fn index_of(&self, t: f64) -> usize {
        let i = ((t - self.schedule.trace_start) * self.sample_rate).round();
        i.clamp(0.0, self.n_samples() as f64) as usize
    }

    fn validate(&self) -> Result<(), SynthError> {
        self.schedule.validate()?;
        self.channel.validate()?;
        self.medium.validate()?;
        if self.channel.t_off != self.schedule.t_off || self.channel.t_on != self.schedule.t_on {
            return Err(SynthError::Schedule("channel and schedule switch times differ".into()));
        }
        if !(self.sample_rate > 0.0) {
            return Err(SynthError::Parameter("sample rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Builds the noise-to-trace map of one scenario at LO phase `theta`.
///
/// Geometry (times relative to the control switch-off `t_off`, `τ_g` the
/// group delay rounded to the sample grid):
/// - source only: pulse texture on `[t_off - pulse_len, t_off)`, leak elsewhere;
/// - delayed: the same mask shifted by `τ_g`, both textures filtered by the medium;
/// - store/retrieve: delayed leak and pulse up to `t_off`, shot noise on
///   `[t_off, t_on + τ_g)`, delayed leak afterwards, and the retrieval mode
///   starting at `t_on` rescaled so its variance exceeds the background by
///   `η(t_s) (S̄(θ) - 1)`.
pub fn build_sequence_operator(
    setup: &SequenceSetup,
    scenario: Scenario,
    theta: f64,
) -> Result<SequenceOperator, SynthError> {
    setup.validate()?;
    let n = setup.n_samples();
    let fs = setup.sample_rate;
    let sch = &setup.schedule;
    let gains = |s: &QuadSpectrum| amplitude_gains(s, theta, n, fs);
    let region = |start: usize, end: usize, texture: usize| Region { start, end: end.max(start), texture };

    if scenario == Scenario::Vacuum {
        return SequenceOperator::stationary(n, None);
    }
    let leak = apply_loss(&setup.source, sch.tail_leak)?;
    if scenario == Scenario::SourceOnly {
        let p0 = setup.index_of(sch.t_off - sch.pulse_len);
        let p1 = setup.index_of(sch.t_off);
        return SequenceOperator::new(
            n,
            vec![gains(&leak)?, gains(&setup.source)?],
            vec![region(0, p0, 0), region(p0, p1, 1), region(p1, n, 0)],
        );
    }

    let delay = setup.medium.group_delay()?;
    let eit_pulse = apply_filter(&setup.source, &setup.medium)?;
    let eit_leak = apply_filter(&leak, &setup.medium)?;
    let textures = vec![gains(&eit_leak)?, gains(&eit_pulse)?, None];
    let d0 = setup.index_of(sch.t_off - sch.pulse_len + delay);
    let d1 = setup.index_of(sch.t_off + delay);
    if scenario == Scenario::EitDelay {
        return SequenceOperator::new(n, textures, vec![region(0, d0, 0), region(d0, d1, 1), region(d1, n, 0)]);
    }

    let off = setup.index_of(sch.t_off);
    let back_on = setup.index_of(sch.t_on + delay);
    let d0 = d0.min(off);
    let background = SequenceOperator::new(
        n,
        textures,
        vec![region(0, d0, 0), region(d0, off, 1), region(off, back_on, 2), region(back_on, n, 0)],
    )?;

    let ch = &setup.channel;
    let on = setup.index_of(sch.t_on);
    let mode: Vec<f64> = (on..n).map(|i| ch.retrieval_mode(sch.trace_start + i as f64 / fs)).collect();
    let (s_min, s_max) = lorentzian_average(&setup.source, MODE_LORENTZIAN_FWHM)?;
    let (s, c) = theta.sin_cos();
    let mean_in = s_min * c * c + s_max * s * s;
    let excess = ch.efficiency(ch.storage_time()) * (mean_in - 1.0);
    if excess == 0.0 {
        return Ok(background);
    }
    let mut g = vec![0.0; n];
    let norm = mode.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (dst, m) in g[on..].iter_mut().zip(&mode) {
        *dst = m / norm;
    }
    let v_bg = background.expected_square(&g);
    let v = v_bg + excess;
    if !(v > 0.0) {
        return Err(SynthError::Parameter(format!("retrieved mode variance {v} is not positive")));
    }
    background.with_mode_scaling(on, mode, (v / v_bg).sqrt())
}

/// Run tag separating LO drift draws of different (scenario, phase) runs.
pub fn drift_tag(scenario: Scenario, theta: f64) -> u64 {
    run_tag(&[scenario.code() as u64, theta.to_bits()])
}

/// One sequence (index 0 of the run) of `scenario` at LO phase `theta`, with
/// imperfections applied last.
pub fn synth_sequence(
    setup: &SequenceSetup,
    imperfections: &ImperfectionBudget,
    scenario: Scenario,
    theta: f64,
    seed: u64,
) -> Result<HomodyneTrace, SynthError> {
    let op = build_sequence_operator(setup, scenario, theta)?;
    let w = normals(seed, Domain::Optical, 0, op.len());
    let trace = HomodyneTrace {
        sample_rate: setup.sample_rate,
        samples: op.apply(&w),
        lo_phase: theta,
        scenario,
        seed,
        t0_offset: setup.schedule.trace_start,
    };
    let key = ImperfectionKey {
        root_seed: seed,
        stream_id: 0,
        measurement: 0,
        drift_tag: drift_tag(scenario, theta),
        full_scale: None,
    };
    apply_imperfections(&trace, imperfections, &key)
}
