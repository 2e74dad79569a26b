#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use sqmem_core::expectation::RetrievalFluxModel;
use sqmem_core::medium::{fit_medium, FitMode, RB87_D1_LINEWIDTH};
use sqmem_core::spectra::{calibrate_opo, make_opo_spectrum, OpoSource, QuadSpectrum};
use sqmem_core::storage::{storage_channel, StorageChannel, HALVING_DECAY_TIME};
use sqmem_core::synth::{bin_frequencies, PulseSchedule, SequenceSetup};

pub const FS: f64 = 2e8;

pub fn source(max_db: f64, min_db: f64) -> OpoSource {
    let (x, eta) = calibrate_opo(max_db, min_db).unwrap();
    OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 2.0 * PI * 1e7 }
}

pub fn design_grid() -> Vec<f64> {
    (0..2048).map(|k| 10e6 * k as f64 / 2047.0).collect()
}

pub fn schedule() -> PulseSchedule {
    PulseSchedule {
        pulse_len: 930e-9,
        tail_leak: 0.05,
        t_off: 0.0,
        t_on: 3e-6,
        sequence_len: 11e-6,
        sequences_per_measurement: 90,
        n_measurements: 1000,
        trace_start: -1.48e-6,
    }
}

pub fn empty_channel() -> StorageChannel {
    StorageChannel { eta0: 0.0, decay_time: HALVING_DECAY_TIME, retrieval_tau: 250e-9, t_off: 0.0, t_on: 3e-6 }
}

/// Medium fitted to the 135 ns delay, channel calibrated to a 0.2 peak flux
/// ratio, source on the synthesis bin grid.
pub fn calibrated_setup(max_db: f64, min_db: f64, schedule: PulseSchedule) -> SequenceSetup {
    let src = source(max_db, min_db);
    let design = make_opo_spectrum(&src, &design_grid()).unwrap();
    let fit = fit_medium(5.0, RB87_D1_LINEWIDTH, 135e-9, 2.7e6, &design, FitMode::DelayPriority).unwrap();
    let n = schedule.n_samples(FS);
    let ch = StorageChannel { t_off: schedule.t_off, t_on: schedule.t_on, ..empty_channel() };
    let mut setup = SequenceSetup {
        source: make_opo_spectrum(&src, &bin_frequencies(n, FS)).unwrap(),
        medium: fit.medium,
        channel: ch,
        schedule,
        sample_rate: FS,
    };
    let model = RetrievalFluxModel::new(&setup, 250e-9, 750e-9, 40e-9).unwrap();
    setup.channel = storage_channel(ch, 0.2, |e| model.ratio(e)).unwrap();
    setup
}

pub fn vacuum_to(f_max: f64) -> QuadSpectrum {
    QuadSpectrum::vacuum(vec![0.0, f_max]).unwrap()
}

/// Welch estimate (rectangular, non-overlapping segments, mean removed)
/// averaged over DFT bins inside `[lo, hi]`.
pub fn welch_band(records: &[&[f64]], seg: usize, fs: f64, lo: f64, hi: f64) -> f64 {
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let (mut acc, mut count) = (0.0, 0usize);
    for x in records {
        for s in x.chunks_exact(seg) {
            let mean = s.iter().sum::<f64>() / seg as f64;
            let mut buf: Vec<Complex64> = s.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
            fft.process(&mut buf);
            for (k, c) in buf.iter().enumerate().take(seg / 2 + 1).skip(1) {
                let f = k as f64 * fs / seg as f64;
                if f >= lo && f <= hi {
                    acc += c.norm_sqr() / seg as f64;
                    count += 1;
                }
            }
        }
    }
    acc / count as f64
}
