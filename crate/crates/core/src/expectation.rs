//! Exact ensemble expectations of the estimators for synthesized scenarios
//! with an ideal detector. Each trace is `x = A w` with white `w`, so any
//! linear statistic `uᵀx` has variance `‖Aᵀu‖²` and the shot reference has
//! `‖u‖²`.

use std::f64::consts::FRAC_PI_2;

use crate::analysis::{ModeFunction, ModeProjector, WindowPlan};
use crate::storage::{lorentzian_average, MODE_LORENTZIAN_FWHM};
use crate::synth::{build_sequence_operator, Scenario, SequenceOperator, SequenceSetup, SynthError};

/// Expected band power per Method I window, relative to shot noise.
pub fn expected_window_levels(op: &SequenceOperator, plan: &WindowPlan) -> Vec<f64> {
    let n = op.len();
    let m = plan.n_per_window as f64;
    (0..plan.n_windows)
        .map(|w| {
            let mut sig = 0.0;
            let mut shot = 0.0;
            for b in 0..plan.bins.len() {
                let (re, im) = plan.window_weights(w, b, n);
                sig += (op.expected_square(&re) + op.expected_square(&im)) / m;
                shot += (dot(&re, &re) + dot(&im, &im)) / m;
            }
            sig / shot
        })
        .collect()
}

/// Expected mode-quadrature variance relative to shot noise.
pub fn expected_mode_level(op: &SequenceOperator, projector: &ModeProjector) -> f64 {
    let u = projector.full_weights(op.len());
    op.expected_square(&u) / dot(&u, &u)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Start times of the Method II timeline: every `step` seconds from the trace
/// start while the mode window fits in the record.
pub fn mode_t0_grid(setup: &SequenceSetup, window: f64, step: f64) -> Vec<f64> {
    let sch = &setup.schedule;
    let end = sch.trace_start + (setup.n_samples() as f64 - 1.0) / setup.sample_rate;
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t0 = sch.trace_start + k as f64 * step;
        if t0 + window > end + 1e-15 {
            break;
        }
        out.push(t0);
        k += 1;
    }
    out
}

/// Per-t0 quantities for one phase of the store/retrieve run, from which the
/// expected mode level follows in closed form for any retrieval efficiency.
#[derive(Debug, Clone)]
struct PhaseTerms {
    /// `‖A_bᵀu‖² / ‖u‖²` per t0.
    aa: Vec<f64>,
    /// `(gᵀu)(A_bᵀu · A_bᵀg) / ‖u‖²` per t0.
    cross: Vec<f64>,
    /// `(gᵀu)² / ‖u‖²` per t0.
    gg: Vec<f64>,
    /// `‖A_bᵀg‖²`: background variance of the retrieval mode.
    v_bg: f64,
    /// Lorentzian-averaged input variance at this phase.
    mean_in: f64,
}

impl PhaseTerms {
    fn level(&self, i: usize, efficiency: f64) -> f64 {
        let dv = efficiency * (self.mean_in - 1.0);
        let c1 = ((self.v_bg + dv) / self.v_bg).sqrt() - 1.0;
        self.aa[i] + 2.0 * c1 * self.cross[i] + c1 * c1 * self.gg[i] * self.v_bg
    }
}

/// Expected Method II flux timelines (phases 0 and π/2) of the delayed pulse
/// and of the store/retrieve run as a function of the retrieval efficiency
/// at the configured storage time.
#[derive(Debug, Clone)]
pub struct RetrievalFluxModel {
    pub t0: Vec<f64>,
    pub delayed_flux: Vec<f64>,
    terms: [PhaseTerms; 2],
    t_off: f64,
}

impl RetrievalFluxModel {
    pub fn new(setup: &SequenceSetup, mode_tau: f64, mode_window: f64, step: f64) -> Result<Self, SynthError> {
        let t0 = mode_t0_grid(setup, mode_window, step);
        if t0.is_empty() {
            return Err(SynthError::Schedule("mode window longer than the trace".into()));
        }
        let n = setup.n_samples();
        let fs = setup.sample_rate;
        let sch = &setup.schedule;
        let projectors = t0
            .iter()
            .map(|&t| {
                ModeProjector::new(&ModeFunction::new(mode_tau, t, mode_window), fs, sch.trace_start, n)
                    .map(|p| p.full_weights(n))
                    .map_err(|e| SynthError::Parameter(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut empty = setup.clone();
        empty.channel.eta0 = 0.0;
        let on = empty.index_of(sch.t_on);
        let mut g = vec![0.0; n];
        for (i, v) in g.iter_mut().enumerate().skip(on) {
            *v = setup.channel.retrieval_mode(sch.trace_start + i as f64 / fs);
        }
        let gnorm = dot(&g, &g).sqrt();
        g.iter_mut().for_each(|v| *v /= gnorm);
        let (s_min, s_max) = lorentzian_average(&setup.source, MODE_LORENTZIAN_FWHM)?;

        let mut delayed_flux = vec![-2.0; t0.len()];
        let mut terms = Vec::with_capacity(2);
        for (theta, mean_in) in [(0.0, s_min), (FRAC_PI_2, s_max)] {
            let del = build_sequence_operator(setup, Scenario::EitDelay, theta)?;
            let bg = build_sequence_operator(&empty, Scenario::StoreRetrieve, theta)?;
            let b = bg.adjoint(&g);
            let mut pt = PhaseTerms { aa: Vec::new(), cross: Vec::new(), gg: Vec::new(), v_bg: dot(&b, &b), mean_in };
            for (k, u) in projectors.iter().enumerate() {
                let uu = dot(u, u);
                delayed_flux[k] += del.expected_square(u) / uu;
                let a = bg.adjoint(u);
                let gu = dot(&g, u);
                pt.aa.push(dot(&a, &a) / uu);
                pt.cross.push(gu * dot(&a, &b) / uu);
                pt.gg.push(gu * gu / uu);
            }
            terms.push(pt);
        }
        let terms: [PhaseTerms; 2] = terms.try_into().expect("two phases");
        Ok(Self { t0, delayed_flux, terms, t_off: sch.t_off })
    }

    /// Expected store/retrieve flux timeline at retrieval efficiency `efficiency`.
    pub fn retrieve_flux(&self, efficiency: f64) -> Vec<f64> {
        (0..self.t0.len())
            .map(|i| self.terms[0].level(i, efficiency) + self.terms[1].level(i, efficiency) - 2.0)
            .collect()
    }

    /// Expected mode levels `(phase 0, phase π/2)` of the store/retrieve run at `t0[i]`.
    pub fn retrieve_levels(&self, i: usize, efficiency: f64) -> (f64, f64) {
        (self.terms[0].level(i, efficiency), self.terms[1].level(i, efficiency))
    }

    pub fn delayed_peak(&self) -> f64 {
        self.delayed_flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest retrieved flux after the control switch-off, divided by the
    /// delayed-pulse peak.
    pub fn ratio(&self, efficiency: f64) -> f64 {
        let peak = self
            .retrieve_flux(efficiency)
            .iter()
            .zip(&self.t0)
            .filter(|(_, &t)| t >= self.t_off)
            .map(|(f, _)| *f)
            .fold(f64::NEG_INFINITY, f64::max);
        peak / self.delayed_peak()
    }
}
