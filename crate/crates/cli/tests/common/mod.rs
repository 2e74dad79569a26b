//! Random valid-looking configurations for round-trip properties.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use sqmem_cli::config::{ExperimentConfig, Methods};
use sqmem_core::medium::FitMode;
use sqmem_core::synth::SpikeLine;

fn scaled(base: f64) -> impl Strategy<Value = f64> {
    (0.5f64..2.0).prop_map(move |k| base * k)
}

fn auto(s: impl Strategy<Value = f64>) -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), s.prop_map(Some)]
}

prop_compose! {
    pub fn arb_config()(
        levels in (0.1f64..15.0, -8.0f64..-0.1),
        pump in auto(0.0f64..0.99),
        hwhm in scaled(2.0 * PI * 1e7),
        grid in (scaled(1e7), 2usize..5000),
        medium in (scaled(5.0), auto(0.0f64..1e8), scaled(135e-9), scaled(2.7e6), any::<bool>()),
        channel in (auto(0.0f64..=1.0), 0.01f64..=1.0, scaled(2.9e-6), scaled(250e-9), 0.5e-6f64..5e-6),
        schedule in (0.0f64..0.9, 1u64..200, 1u64..100_000),
        lo in (0.0f64..1e6, 1.0f64..2.0, proptest::option::of(1u32..=32), -60.0f64..0.0),
        spikes in proptest::collection::vec((1.0f64..699e3, -90.0f64..0.0), 0..4),
        analysis in (0usize..3, scaled(640e-9), 0.0f64..1e6, prop::collection::vec(0usize..64, 0..4)),
        run in (any::<u64>(), "[a-z][a-z0-9_/.-]{0,12}", -10.0f64..10.0, proptest::option::of(2usize..100_000), any::<bool>()),
    ) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        (c.source.max_db, c.source.min_db) = levels;
        c.source.pump_param = pump;
        c.source.escape_eff = pump.map(|x| 0.05 + x * 0.9);
        c.source.cavity_hwhm = hwhm;
        (c.source.grid_max_hz, c.source.grid_points) = grid;
        let (od, rabi, delay, fwhm, strict) = medium;
        c.medium.optical_depth = od;
        c.medium.control_rabi = rabi;
        c.medium.ground_decoherence = rabi.map(|r| r * 1e-3);
        c.medium.delay_target = delay;
        c.medium.fwhm_target = fwhm;
        c.medium.fit = if strict { FitMode::Strict } else { FitMode::DelayPriority };
        let (eta0, ratio, decay, tau, t_on) = channel;
        c.channel.eta0 = eta0;
        c.channel.flux_ratio_target = ratio;
        c.channel.decay_time = decay;
        c.channel.retrieval_tau = tau;
        c.channel.t_on = t_on;
        let (leak, spm, nm) = schedule;
        c.schedule.tail_leak = leak;
        c.schedule.sequences_per_measurement = spm;
        c.schedule.n_measurements = nm;
        let (band_lo, width, bits, floor) = lo;
        c.imperfections.lo_band_lo_hz = band_lo;
        c.imperfections.lo_band_hi_hz = band_lo * width + 1.0;
        c.imperfections.adc_bits = bits;
        c.imperfections.electronic_floor_db = floor;
        c.imperfections.spike_lines = spikes.into_iter().map(|(freq_hz, power_db)| SpikeLine { freq_hz, power_db }).collect();
        let (methods, window, band_lo, bins) = analysis;
        c.analysis.methods = [Methods::Both, Methods::WindowOnly, Methods::ModeOnly][methods];
        c.analysis.window = window;
        c.analysis.band_lo_hz = band_lo;
        c.analysis.band_hi_hz = band_lo + 1e6;
        c.analysis.excluded_bins = bins;
        let (seed, dir, phase, sequences, traces) = run;
        c.run.seed = seed;
        c.run.out_dir = dir;
        c.run.lo_phases = (phase, phase + FRAC_PI_2);
        c.run.sequences = sequences;
        c.run.write_traces = traces;
        c
    }
}
