//! Fast invariant checks runnable from the command line.

use std::f64::consts::FRAC_PI_2;

use sqmem_core::analysis::{error_bars, method1_timeline, Method1Config};
use sqmem_core::io::{decode_traces, encode_traces};
use sqmem_core::medium::{EitMedium, RB87_D1_LINEWIDTH};
use sqmem_core::rng::{normals, Domain};
use sqmem_core::spectra::Complex64;
use sqmem_core::spectra::{
    apply_filter, apply_loss, calibrate_opo, make_opo_spectrum, quad_at, OpoSource, QuadSpectrum,
};
use sqmem_core::synth::{synth_stationary, HomodyneTrace, Scenario};
use sqmem_core::to_db;

use crate::config::ExperimentConfig;

type Check = fn() -> Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid() -> Vec<f64> {
    (0..64).map(|k| k as f64 * 1e5).collect()
}

fn test_spectrum() -> QuadSpectrum {
    let (x, eta) = calibrate_opo(6.0, -2.0).expect("feasible");
    make_opo_spectrum(&OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 1e6 }, &grid()).expect("valid")
}

fn loss_matches_beam_splitter() -> Result<(), String> {
    let spec = test_spectrum();
    for eta in [0.0, 0.2, 0.5, 0.93, 1.0] {
        let out = apply_loss(&spec, eta).map_err(|e| e.to_string())?;
        for i in 0..spec.len() {
            // Output covariance of a beam splitter mixing the state with vacuum.
            let t = eta.sqrt();
            let r = (1.0 - eta).sqrt();
            let expect = [t * t * spec.s_min()[i] + r * r, t * t * spec.s_max()[i] + r * r];
            ensure((out.s_min()[i] - expect[0]).abs() < 1e-12 && (out.s_max()[i] - expect[1]).abs() < 1e-12, || {
                format!("eta {eta}, bin {i}")
            })?;
        }
    }
    Ok(())
}

fn flat_filter_is_loss() -> Result<(), String> {
    let spec = test_spectrum();
    let eta = (-5.0f64).exp();
    let filter = |_: f64| Complex64::from_polar(eta.sqrt(), 0.0);
    let a = apply_filter(&spec, &filter).map_err(|e| e.to_string())?;
    let b = apply_loss(&spec, eta).map_err(|e| e.to_string())?;
    ensure(a.s_max().iter().zip(b.s_max()).all(|(x, y)| (x - y).abs() < 1e-12), || "s_max differs".into())
}

fn source_round_trip() -> Result<(), String> {
    let spec = test_spectrum();
    let (lo, hi) = (to_db(quad_at(&spec, 0.0, 0.0).unwrap()), to_db(quad_at(&spec, FRAC_PI_2, 0.0).unwrap()));
    ensure((hi - 6.0).abs() < 1e-9 && (lo + 2.0).abs() < 1e-9, || format!("{hi} / {lo} dB"))
}

fn delay_limit() -> Result<(), String> {
    let rabi = 2.0 * std::f64::consts::PI * 5.8e6;
    let m = EitMedium::new(5.0, RB87_D1_LINEWIDTH, rabi, 0.0).map_err(|e| e.to_string())?;
    let d = m.group_delay().map_err(|e| e.to_string())?;
    let analytic = 5.0 * RB87_D1_LINEWIDTH / (rabi * rabi);
    ensure((d / analytic - 1.0).abs() < 1e-3, || format!("{d} vs {analytic}"))
}

fn traces(seed: u64) -> Vec<HomodyneTrace> {
    (0..8)
        .map(|i| HomodyneTrace {
            sample_rate: 2e8,
            samples: normals(seed, Domain::Optical, i, 512),
            lo_phase: 0.0,
            scenario: Scenario::Vacuum,
            seed,
            t0_offset: 0.0,
        })
        .collect()
}

fn self_normalization() -> Result<(), String> {
    let t = traces(3);
    let est = method1_timeline(&t, &t, &Method1Config::default(), 0.004).map_err(|e| e.to_string())?;
    ensure(est.iter().all(|e| e.value_db == 0.0), || "nonzero level".into())
}

fn hodt_round_trip() -> Result<(), String> {
    let t = traces(4);
    let back = decode_traces(&encode_traces(&t)).map_err(|e| e.to_string())?;
    ensure(back == t, || "records differ".into())
}

fn config_round_trip() -> Result<(), String> {
    let c = ExperimentConfig::default();
    let back = ExperimentConfig::parse(&c.to_text()).map_err(|e| e.to_string())?;
    ensure(back == c, || "defaults differ after round trip".into())
}

fn synthesis_determinism() -> Result<(), String> {
    let vac = QuadSpectrum::vacuum(vec![0.0, 1e8]).map_err(|e| e.to_string())?;
    let a = synth_stationary(&vac, 0.0, 2e8, 1e-6, 9).map_err(|e| e.to_string())?;
    let b = synth_stationary(&vac, 0.0, 2e8, 1e-6, 9).map_err(|e| e.to_string())?;
    ensure(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()), || "traces differ".into())
}

fn error_bar_scale() -> Result<(), String> {
    let (s, _) = error_bars(900_000, 0.004).map_err(|e| e.to_string())?;
    ensure((s - 0.0065).abs() < 2e-4, || format!("{s} dB"))
}

pub const CHECKS: &[(&str, Check)] = &[
    ("loss matches beam-splitter covariance", loss_matches_beam_splitter),
    ("flat filter equals loss", flat_filter_is_loss),
    ("source calibration round trip", source_round_trip),
    ("group delay analytic limit", delay_limit),
    ("estimator self-normalization", self_normalization),
    ("HODT round trip", hodt_round_trip),
    ("config round trip", config_round_trip),
    ("synthesis determinism", synthesis_determinism),
    ("error bar at 9e5 trials", error_bar_scale),
];

/// Runs every check and returns one line per check plus the failure count.
pub fn run() -> (String, usize) {
    let mut out = String::new();
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => out.push_str(&format!("PASS {name}\n")),
            Err(e) => {
                failed += 1;
                out.push_str(&format!("FAIL {name}: {e}\n"));
            }
        }
    }
    (out, failed)
}
