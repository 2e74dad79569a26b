//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use sqmem_core::medium::{EitMedium, RB87_D1_LINEWIDTH};
use sqmem_core::spectra::{calibrate_opo, make_opo_spectrum};
use sqmem_core::storage::{StorageChannel, HALVING_DECAY_TIME};
use sqmem_core::synth::{bin_frequencies, PulseSchedule, SequenceSetup};
use sqmem_core::OpoSource;

pub const SAMPLE_RATE: f64 = 2e8;

/// Store/retrieve setup at the default operating point: 6 / -2 dB source,
/// 135 ns delay, 3 us storage.
pub fn default_setup() -> SequenceSetup {
    let schedule = PulseSchedule {
        pulse_len: 930e-9,
        tail_leak: 0.05,
        t_off: 0.0,
        t_on: 3e-6,
        sequence_len: 11e-6,
        sequences_per_measurement: 90,
        n_measurements: 1000,
        trace_start: -1.48e-6,
    };
    let (x, eta) = calibrate_opo(6.0, -2.0).expect("feasible levels");
    let source = OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 2.0 * PI * 1e7 };
    let n = schedule.n_samples(SAMPLE_RATE);
    SequenceSetup {
        source: make_opo_spectrum(&source, &bin_frequencies(n, SAMPLE_RATE)).expect("valid source"),
        medium: EitMedium::new(5.0, RB87_D1_LINEWIDTH, 3.658e7, 0.0).expect("valid medium"),
        channel: StorageChannel {
            eta0: 0.326,
            decay_time: HALVING_DECAY_TIME,
            retrieval_tau: 250e-9,
            t_off: 0.0,
            t_on: 3e-6,
        },
        schedule,
        sample_rate: SAMPLE_RATE,
    }
}
