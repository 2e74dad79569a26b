//! Λ-system EIT medium as a linear transfer function.
//!
//! The probe sideband at two-photon detuning `δ` (rad/s) sees
//! `T(δ) = exp[-(d/2) Λ(δ)]` with
//! `Λ(δ) = (Γ/2)(γ - iδ) / [(Γ/2 - iδ)(γ - iδ) + Ω²/4]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectra::{apply_filter, quad_at, QuadSpectrum, SpectrumError, Transfer};

/// Rb87 D1 natural linewidth in rad/s.
pub const RB87_D1_LINEWIDTH: f64 = 2.0 * PI * 5.75e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("invalid medium parameter: {0}")]
    Parameter(String),
    #[error("group delay undefined without control field")]
    UndefinedDelay,
    #[error("transmitted excess has no half-maximum crossing inside the grid")]
    WindowTooWide,
    #[error("{target} target infeasible: {detail}")]
    Infeasible { target: &'static str, detail: String },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitMedium {
    pub optical_depth: f64,
    /// Excited-state linewidth Γ, rad/s.
    pub linewidth: f64,
    /// Control Rabi frequency Ω, rad/s.
    pub control_rabi: f64,
    /// Ground-state decoherence rate γ, rad/s.
    pub ground_decoherence: f64,
}

impl EitMedium {
    pub fn new(
        optical_depth: f64,
        linewidth: f64,
        control_rabi: f64,
        ground_decoherence: f64,
    ) -> Result<Self, MediumError> {
        let m = Self { optical_depth, linewidth, control_rabi, ground_decoherence };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MediumError> {
        let finite = [self.optical_depth, self.linewidth, self.control_rabi, self.ground_decoherence]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(MediumError::Parameter("non-finite medium parameter".into()));
        }
        if self.optical_depth <= 0.0 {
            return Err(MediumError::Parameter(format!("optical depth {} must be > 0", self.optical_depth)));
        }
        if self.linewidth <= 0.0 {
            return Err(MediumError::Parameter(format!("linewidth {} must be > 0", self.linewidth)));
        }
        if self.control_rabi < 0.0 || self.ground_decoherence < 0.0 {
            return Err(MediumError::Parameter("Rabi frequency and decoherence must be >= 0".into()));
        }
        Ok(())
    }

    fn response_kernel(&self, delta: f64) -> Complex64 {
        let half_g = Complex64::new(self.linewidth / 2.0, -delta);
        let coh = Complex64::new(self.ground_decoherence, -delta);
        if self.control_rabi == 0.0 {
            // Two-level limit; the ground coherence factor cancels.
            return Complex64::new(self.linewidth / 2.0, 0.0) / half_g;
        }
        let denom = half_g * coh + self.control_rabi * self.control_rabi / 4.0;
        coh * (self.linewidth / 2.0) / denom
    }

    /// Amplitude transmission at two-photon detuning `delta` (rad/s).
    pub fn transfer(&self, delta: f64) -> Complex64 {
        (-(self.optical_depth / 2.0) * self.response_kernel(delta)).exp()
    }

    /// Unwrapped transmission phase `-(d/2) Im Λ(δ)`.
    fn phase(&self, delta: f64) -> f64 {
        -(self.optical_depth / 2.0) * self.response_kernel(delta).im
    }

    /// Group delay in seconds from a central difference of the phase at δ = 0.
    pub fn group_delay(&self) -> Result<f64, MediumError> {
        if self.control_rabi <= 0.0 {
            return Err(MediumError::UndefinedDelay);
        }
        let h = self.control_rabi / 1000.0;
        Ok((self.phase(h) - self.phase(-h)) / (2.0 * h))
    }
}

impl Transfer for EitMedium {
    fn response(&self, freq_hz: f64) -> Complex64 {
        self.transfer(2.0 * PI * freq_hz)
    }
}

/// Full width at half maximum (Hz) of the excess anti-squeezing `s_max - 1`
/// of the source after transmission through the medium.
///
/// The half-maximum crossing is bracketed on the grid and refined by
/// bisection, with the source interpolated linearly and the medium evaluated
/// exactly. For a peak away from zero detuning the outer crossing is used.
pub fn eit_fwhm(medium: &EitMedium, source: &QuadSpectrum) -> Result<f64, MediumError> {
    medium.validate()?;
    let out = apply_filter(source, medium)?;
    let excess: Vec<f64> = out.s_max().iter().map(|s| s - 1.0).collect();
    let (ipk, &peak) = excess.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("spectrum is non-empty");
    if peak <= 0.0 {
        return Err(MediumError::WindowTooWide);
    }
    let half = peak / 2.0;
    let grid = source.freq_hz();
    let j = (ipk + 1..excess.len()).find(|&j| excess[j] < half).ok_or(MediumError::WindowTooWide)?;
    let f_excess = |f: f64| -> Result<f64, MediumError> {
        let s = quad_at(source, PI / 2.0, f)?;
        Ok(medium.response(f).norm_sqr() * (s - 1.0) - half)
    };
    let (mut lo, mut hi) = (grid[j - 1], grid[j]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_excess(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

/// How [`fit_medium`] treats a window target that cannot be met together with
/// the delay target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Both targets within 2% or an error.
    Strict,
    /// Delay is matched exactly; the window is brought as close to its target
    /// as the delay constraint allows and the residual is reported.
    DelayPriority,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumFit {
    pub medium: EitMedium,
    pub delay_s: f64,
    pub fwhm_hz: f64,
    pub delay_target_s: f64,
    pub fwhm_target_hz: f64,
    /// Whether both targets are met within 2%.
    pub within_tolerance: bool,
}

impl MediumFit {
    pub fn delay_residual(&self) -> f64 {
        self.delay_s / self.delay_target_s - 1.0
    }

    pub fn fwhm_residual(&self) -> f64 {
        self.fwhm_hz / self.fwhm_target_hz - 1.0
    }
}

const FIT_TOL: f64 = 0.02;

/// Solves for (Ω, γ) so the medium shows the target delay and window, both
/// within 2%. See [`fit_medium`].
pub fn calibrate_medium(
    optical_depth: f64,
    linewidth: f64,
    delay_target_s: f64,
    fwhm_target_hz: f64,
    source: &QuadSpectrum,
) -> Result<EitMedium, MediumError> {
    fit_medium(optical_depth, linewidth, delay_target_s, fwhm_target_hz, source, FitMode::Strict).map(|f| f.medium)
}

/// Nested bisection: the inner solve finds Ω giving the target delay at a
/// fixed γ, the outer one finds γ giving the target window.
pub fn fit_medium(
    optical_depth: f64,
    linewidth: f64,
    delay_target_s: f64,
    fwhm_target_hz: f64,
    source: &QuadSpectrum,
    mode: FitMode,
) -> Result<MediumFit, MediumError> {
    EitMedium::new(optical_depth, linewidth, 0.0, 0.0)?;
    if !(delay_target_s > 0.0 && delay_target_s.is_finite()) {
        return Err(MediumError::Infeasible {
            target: "delay",
            detail: format!("target {delay_target_s} s must be > 0"),
        });
    }
    if !(fwhm_target_hz > 0.0 && fwhm_target_hz.is_finite()) {
        return Err(MediumError::Infeasible {
            target: "fwhm",
            detail: format!("target {fwhm_target_hz} Hz must be > 0"),
        });
    }
    let at = |gamma: f64| -> Option<Result<(EitMedium, f64), MediumError>> {
        let rabi = rabi_for_delay(optical_depth, linewidth, gamma, delay_target_s)?;
        let m = EitMedium { optical_depth, linewidth, control_rabi: rabi, ground_decoherence: gamma };
        Some(eit_fwhm(&m, source).map(|w| (m, w)))
    };

    let mut gammas = vec![0.0];
    gammas.extend((0..=80).map(|k| 1e2 * (linewidth / 1e2).powf(k as f64 / 80.0)));
    let mut scan: Vec<(f64, EitMedium, f64)> = Vec::new();
    for &g in &gammas {
        match at(g) {
            Some(Ok((m, w))) => scan.push((g, m, w)),
            Some(Err(MediumError::WindowTooWide)) => continue,
            Some(Err(e)) => return Err(e),
            None => break,
        }
    }
    if scan.is_empty() {
        return Err(MediumError::Infeasible {
            target: "delay",
            detail: format!("no control field gives {delay_target_s} s at optical depth {optical_depth}"),
        });
    }

    let bracket = scan
        .windows(2)
        .find(|w| (w[0].2 - fwhm_target_hz) * (w[1].2 - fwhm_target_hz) <= 0.0)
        .map(|w| (w[0].0, w[1].0));
    let exact = if let Some((mut lo, mut hi)) = bracket {
        let sign_lo = at(lo).expect("scanned point is feasible")?.1 > fwhm_target_hz;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            match at(mid) {
                Some(Ok((_, w))) if (w > fwhm_target_hz) == sign_lo => lo = mid,
                Some(Ok(_)) => hi = mid,
                _ => hi = mid,
            }
        }
        at(lo).and_then(Result::ok)
    } else if scan.len() == 1 {
        Some((scan[0].1, scan[0].2))
    } else {
        None
    };

    let build = |m: EitMedium, w: f64| -> Result<MediumFit, MediumError> {
        let delay = m.group_delay()?;
        let ok = (delay / delay_target_s - 1.0).abs() <= FIT_TOL && (w / fwhm_target_hz - 1.0).abs() <= FIT_TOL;
        Ok(MediumFit { medium: m, delay_s: delay, fwhm_hz: w, delay_target_s, fwhm_target_hz, within_tolerance: ok })
    };

    if let Some((m, w)) = exact {
        let fit = build(m, w)?;
        if fit.within_tolerance {
            return Ok(fit);
        }
    }
    let (lo_w, hi_w) = scan.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.2), b.max(s.2)));
    match mode {
        FitMode::Strict => Err(MediumError::Infeasible {
            target: "fwhm",
            detail: format!(
                "window {fwhm_target_hz} Hz unreachable with delay {delay_target_s} s; achievable {lo_w:.4e}..{hi_w:.4e} Hz"
            ),
        }),
        FitMode::DelayPriority => {
            let best = scan
                .iter()
                .min_by(|a, b| (a.2 - fwhm_target_hz).abs().total_cmp(&(b.2 - fwhm_target_hz).abs()))
                .expect("scan is non-empty");
            log::warn!(
                "window {fwhm_target_hz:.4e} Hz unreachable with delay {delay_target_s:.4e} s; keeping the closest, {:.4e} Hz",
                best.2
            );
            build(best.1, best.2)
        }
    }
}

/// Control Rabi frequency giving `target` group delay at fixed decoherence,
/// on the branch where delay decreases with Ω. `None` if unreachable.
pub fn rabi_for_delay(optical_depth: f64, linewidth: f64, gamma: f64, target: f64) -> Option<f64> {
    let delay = |rabi: f64| {
        EitMedium { optical_depth, linewidth, control_rabi: rabi, ground_decoherence: gamma }
            .group_delay()
            .unwrap_or(0.0)
    };
    let center = (optical_depth * linewidth / target).sqrt();
    let n = 241;
    let grid: Vec<f64> = (0..n).map(|k| center * 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&r| delay(r)).collect();
    let ipk = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)?;
    if vals[ipk] < target {
        return None;
    }
    let j = (ipk..n).find(|&j| vals[j] < target)?;
    if j == ipk {
        return None;
    }
    let (mut lo, mut hi) = (grid[j - 1], grid[j]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if delay(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(rabi: f64, gamma: f64) -> EitMedium {
        EitMedium::new(5.0, RB87_D1_LINEWIDTH, rabi, gamma).unwrap()
    }

    #[test]
    fn resonant_transparency_without_decoherence() {
        let t = medium(2.0 * PI * 5e6, 0.0).transfer(0.0);
        assert_eq!(t, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn far_detuned_is_transparent() {
        let m = medium(2.0 * PI * 5e6, 1e4);
        for d in [1e13, -1e13] {
            assert!((m.transfer(d) - 1.0).norm() < 1e-5);
        }
    }

    #[test]
    fn no_control_has_no_delay() {
        assert_eq!(medium(0.0, 0.0).group_delay(), Err(MediumError::UndefinedDelay));
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(EitMedium::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(EitMedium::new(1.0, 1.0, -1.0, 0.0).is_err());
    }
}
