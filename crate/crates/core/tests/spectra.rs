use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use sqmem_core::spectra::*;
use sqmem_core::{from_db, to_db};

type M2 = [[f64; 2]; 2];
type M4 = [[f64; 4]; 4];

/// Beam splitter of power transmission `eta` mixing mode a with vacuum mode
/// b, applied to the joint 4×4 quadrature covariance; returns mode a's block.
fn beam_splitter_oracle(v_in: M2, eta: f64) -> M2 {
    let mut v = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            v[i][j] = v_in[i][j];
        }
        v[2 + i][2 + i] = 1.0;
    }
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let mut s: M4 = [[0.0; 4]; 4];
    for i in 0..2 {
        s[i][i] = t;
        s[i][2 + i] = r;
        s[2 + i][i] = -r;
        s[2 + i][2 + i] = t;
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    acc += s[i][k] * v[k][l] * s[j][l];
                }
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Variance of the quadrature at phase θ from a covariance whose first axis is
/// the θ = 0 quadrature: `n(θ)ᵀ V n(θ)` with `n = (cos θ, sin θ)`.
fn rotated_variance(v: M2, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    c * c * v[0][0] + 2.0 * s * c * v[0][1] + s * s * v[1][1]
}

fn spec_of(points: &[(f64, f64)]) -> QuadSpectrum {
    let f: Vec<f64> = (0..points.len()).map(|k| k as f64 * 1e5).collect();
    QuadSpectrum::new(f, points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect()).unwrap()
}

/// Physical (s_min, s_max) pairs: s_min <= s_max and s_min s_max >= 1.
fn state() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..1.0, 1.0f64..3.0).prop_map(|(a, mix)| (a, mix / a))
}

#[test]
fn no_pump_gives_vacuum() {
    let src = OpoSource { pump_param: 0.0, escape_eff: 0.7, cavity_hwhm: 3.0 };
    let s = make_opo_spectrum(&src, &[0.0, 0.5, 10.0, 1e9]).unwrap();
    assert!(s.s_min().iter().chain(s.s_max()).all(|&v| v == 1.0));
}

#[test]
fn pure_source_saturates_uncertainty() {
    let src = OpoSource { pump_param: 0.3, escape_eff: 1.0, cavity_hwhm: 1e7 };
    let s = make_opo_spectrum(&src, &[0.0, 1e6, 3e7]).unwrap();
    for i in 0..s.len() {
        assert!((s.s_min()[i] * s.s_max()[i] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn escape_efficiency_outside_range_rejected() {
    for eta in [0.0, -0.1, 1.2] {
        let src = OpoSource { pump_param: 0.3, escape_eff: eta, cavity_hwhm: 1.0 };
        assert!(matches!(make_opo_spectrum(&src, &[0.0]), Err(SpectrumError::Parameter(_))));
    }
}

fn solve_levels_by_bisection(s_max: f64, s_min: f64) -> (f64, f64) {
    // Independent route: bisection on x for the ratio of the two excesses.
    let ratio = |x: f64| ((1.0 + x) / (1.0 - x)).powi(2);
    let target = (s_max - 1.0) / (1.0 - s_min);
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, (1.0 - s_min) * (1.0 + x).powi(2) / (4.0 * x))
}

#[test]
fn opo_calibration_six_and_minus_two() {
    let (x, eta) = calibrate_opo(6.0, -2.0).unwrap();
    let (xo, etao) = solve_levels_by_bisection(from_db(6.0), from_db(-2.0));
    assert!((x - xo).abs() < 1e-9 && (eta - etao).abs() < 1e-9);
    assert!((x - 0.48).abs() < 0.005 && (eta - 0.42).abs() < 0.005, "x={x} eta={eta}");
    let s = make_opo_spectrum(&OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 1e7 }, &[0.0]).unwrap();
    assert!((to_db(s.s_max()[0]) - 6.0).abs() < 1e-9);
    assert!((to_db(s.s_min()[0]) + 2.0).abs() < 1e-9);
}

#[test]
fn opo_calibration_retrieval_input_levels() {
    let (x, eta) = calibrate_opo(4.10, -1.24).unwrap();
    let s = make_opo_spectrum(&OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 1.0 }, &[0.0]).unwrap();
    assert!((to_db(s.s_max()[0]) - 4.10).abs() < 1e-9);
    assert!((to_db(s.s_min()[0]) + 1.24).abs() < 1e-9);
}

#[test]
fn opo_calibration_vacuum_limit() {
    let (x, _) = calibrate_opo(1e-6, -1e-6).unwrap();
    assert!(x < 1e-3, "x={x}");
}

#[test]
fn opo_calibration_rejects_infeasible_targets() {
    // Strong squeezing with little anti-squeezing would need efficiency > 1.
    assert!(matches!(calibrate_opo(1.0, -10.0), Err(SpectrumError::Infeasible(_))));
    assert!(matches!(calibrate_opo(-1.0, -2.0), Err(SpectrumError::Infeasible(_))));
}

#[test]
fn loss_example_matches_beam_splitter() {
    let out = apply_loss(&spec_of(&[(0.751, 1.0 / 0.751)]), 0.2).unwrap();
    assert!((out.s_min()[0] - 0.9502).abs() < 1e-12);
    let v = beam_splitter_oracle([[0.751, 0.0], [0.0, 1.0 / 0.751]], 0.2);
    assert!((out.s_min()[0] - v[0][0]).abs() < 1e-12);
}

#[test]
fn loss_identity() {
    let s = spec_of(&[(0.6, 2.0), (0.8, 1.5)]);
    assert_eq!(apply_loss(&s, 1.0).unwrap(), s);
    assert!(apply_loss(&s, 1.1).is_err() && apply_loss(&s, -0.1).is_err());
}

#[test]
fn constant_absorption_filter_example() {
    let s = spec_of(&[(0.631, 3.98)]);
    let g = (-2.5f64).exp();
    let out = apply_filter(&s, &|_f: f64| Complex64::new(g, 0.0)).unwrap();
    assert!((out.s_max()[0] - 1.0201).abs() < 5e-5, "{}", out.s_max()[0]);
    let lossy = apply_loss(&s, (-5.0f64).exp()).unwrap();
    assert!((out.s_max()[0] - lossy.s_max()[0]).abs() < 1e-12);
}

#[test]
fn filter_identity_and_block() {
    let s = spec_of(&[(0.631, 3.98), (0.7, 2.0)]);
    assert_eq!(apply_filter(&s, &|_f: f64| Complex64::new(1.0, 0.0)).unwrap(), s);
    let out = apply_filter(&s, &|_f: f64| Complex64::new(0.0, 0.0)).unwrap();
    assert!(out.s_min().iter().chain(out.s_max()).all(|&v| v == 1.0));
}

#[test]
fn filter_phase_is_ignored_but_symmetry_required() {
    let s = spec_of(&[(0.631, 3.98), (0.7, 2.0)]);
    let delay = |f: f64| Complex64::from_polar(0.8, 2.0 * PI * f * 1e-7);
    let out = apply_filter(&s, &delay).unwrap();
    assert!((out.s_max()[1] - (0.64 * 2.0 + 0.36)).abs() < 1e-12);
    let lopsided = |f: f64| Complex64::new(if f >= 0.0 { 0.5 } else { 0.6 }, 0.0);
    assert!(matches!(apply_filter(&s, &lopsided), Err(SpectrumError::Asymmetric(_))));
    let gain = |_f: f64| Complex64::new(1.01, 0.0);
    assert!(matches!(apply_filter(&s, &gain), Err(SpectrumError::NonPassive { .. })));
}

#[test]
fn quadrature_examples() {
    let s = spec_of(&[(0.631, 3.98)]);
    assert_eq!(quad_at(&s, 0.0, 0.0).unwrap(), 0.631);
    assert!((quad_at(&s, FRAC_PI_2, 0.0).unwrap() - 3.98).abs() < 1e-15);
    let v = rotated_variance([[0.631, 0.0], [0.0, 3.98]], FRAC_PI_4);
    assert!((quad_at(&s, FRAC_PI_4, 0.0).unwrap() - 2.3055).abs() < 1e-12);
    assert!((v - 2.3055).abs() < 1e-12);
}

#[test]
fn quadrature_interpolates_linearly() {
    let s = QuadSpectrum::new(vec![0.0, 2.0], vec![0.5, 0.7], vec![2.0, 3.0]).unwrap();
    assert!((quad_at(&s, 0.0, 0.5).unwrap() - 0.55).abs() < 1e-15);
    assert!((quad_at(&s, FRAC_PI_2, 1.0).unwrap() - 2.5).abs() < 1e-15);
}

#[test]
fn flux_examples() {
    assert_eq!(photon_flux(1.0, 1.0), 0.0);
    assert!((photon_flux(0.631, 3.98) - 2.611).abs() < 1e-12);
    let s = spec_of(&[(0.631, 3.98)]);
    for th in [0.0, FRAC_PI_4, PI / 3.0] {
        let f = photon_flux(quad_at(&s, th, 0.0).unwrap(), quad_at(&s, th + FRAC_PI_2, 0.0).unwrap());
        assert!((f - 2.611).abs() < 1e-12);
    }
}

#[test]
fn band_flux_of_flat_spectrum() {
    let s = QuadSpectrum::new(vec![0.0, 1e6, 5e6], vec![0.631; 3], vec![3.98; 3]).unwrap();
    assert!((band_flux(&s, 1e6, 2e6).unwrap() - 2.611).abs() < 1e-12);
}

#[test]
fn csv_round_trip_is_exact() {
    let src = OpoSource { pump_param: 0.43, escape_eff: 0.295, cavity_hwhm: 2.0 * PI * 1e7 };
    let grid: Vec<f64> = (0..257).map(|k| k as f64 * 10e6 / 256.0).collect();
    let s = make_opo_spectrum(&src, &grid).unwrap();
    assert_eq!(QuadSpectrum::from_csv(&s.to_csv()).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn loss_matches_covariance_oracle(st in state(), eta in 0.0f64..=1.0, theta in 0.0f64..PI) {
        let s = spec_of(&[st]);
        let out = apply_loss(&s, eta).unwrap();
        let v = beam_splitter_oracle([[st.0, 0.0], [0.0, st.1]], eta);
        prop_assert!((out.s_min()[0] - v[0][0]).abs() < 1e-12);
        prop_assert!((out.s_max()[0] - v[1][1]).abs() < 1e-12);
        prop_assert!((quad_at(&out, theta, 0.0).unwrap() - rotated_variance(v, theta)).abs() < 1e-12);
    }

    #[test]
    fn loss_composes(st in state(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let s = spec_of(&[st]);
        let two = apply_loss(&apply_loss(&s, a).unwrap(), b).unwrap();
        let one = apply_loss(&s, a * b).unwrap();
        prop_assert!((two.s_min()[0] - one.s_min()[0]).abs() < 1e-12);
        prop_assert!((two.s_max()[0] - one.s_max()[0]).abs() < 1e-12);
    }

    #[test]
    fn constant_filter_is_loss(st in state(), eta in 0.0f64..=1.0, phase in -PI..PI) {
        let s = spec_of(&[st, (st.0.min(1.0), st.1.max(1.0))]);
        let amp = eta.sqrt();
        let t = move |f: f64| Complex64::from_polar(amp, phase * f.signum());
        let a = apply_filter(&s, &t).unwrap();
        let b = apply_loss(&s, eta).unwrap();
        for i in 0..2 {
            prop_assert!((a.s_min()[i] - b.s_min()[i]).abs() < 1e-12);
            prop_assert!((a.s_max()[i] - b.s_max()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_cannot_purify(a in 0.05f64..1.0, eta in 0.0f64..=1.0) {
        let s = spec_of(&[(a, 1.0 / a)]);
        let out = apply_loss(&s, eta).unwrap();
        prop_assert!(out.s_min()[0] * out.s_max()[0] >= 1.0 - 1e-12);
    }

    #[test]
    fn orthogonal_sum_independent_of_phase(st in state(), t1 in -PI..PI, t2 in -PI..PI) {
        let s = spec_of(&[st]);
        let sum = |t: f64| quad_at(&s, t, 0.0).unwrap() + quad_at(&s, t + FRAC_PI_2, 0.0).unwrap();
        prop_assert!((sum(t1) - sum(t2)).abs() < 1e-12);
    }

    #[test]
    fn opo_calibration_round_trips(hi in 0.1f64..10.0, lo_frac in 0.05f64..0.95) {
        // lo chosen inside the feasible region: with efficiency 1 the levels are
        // reciprocal, so -lo <= hi.
        let lo = -hi * lo_frac;
        let (x, eta) = calibrate_opo(hi, lo).unwrap();
        let s = make_opo_spectrum(&OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: 1.0 }, &[0.0]).unwrap();
        prop_assert!((to_db(s.s_max()[0]) - hi).abs() < 1e-9);
        prop_assert!((to_db(s.s_min()[0]) - lo).abs() < 1e-9);
    }
}
