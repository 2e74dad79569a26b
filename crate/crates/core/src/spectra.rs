//! Quadrature noise spectra of stationary Gaussian light, normalized to shot noise.
//!
//! A [`QuadSpectrum`] stores, on a nonnegative sideband grid, the minimum and
//! maximum quadrature variances `s_min(f) = S(f, 0)` and `s_max(f) = S(f, π/2)`.
//! Intermediate phases follow `S(θ) = s_min cos²θ + s_max sin²θ`.

pub use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance used when checking physical invariants that hold exactly
/// in exact arithmetic (uncertainty product, ordering of the quadratures).
const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("source at or above oscillation threshold (pump parameter {0})")]
    AboveThreshold(f64),
    #[error("frequency {freq_hz} Hz outside spectrum grid [{lo}, {hi}] Hz")]
    Range { freq_hz: f64, lo: f64, hi: f64 },
    #[error("calibration targets infeasible: {0}")]
    Infeasible(String),
    #[error("transfer function violates conjugate symmetry at {0} Hz")]
    Asymmetric(f64),
    #[error("transfer function has gain {gain} > 1 at {freq_hz} Hz")]
    NonPassive { freq_hz: f64, gain: f64 },
    #[error("malformed spectrum table: {0}")]
    Format(String),
}

/// Sideband-resolved quadrature variances relative to shot noise.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpectrum {
    freq_hz: Vec<f64>,
    s_min: Vec<f64>,
    s_max: Vec<f64>,
}

impl QuadSpectrum {
    /// Builds a spectrum after checking the grid and the physical invariants:
    /// strictly increasing nonnegative grid, positive variances,
    /// `s_min <= s_max` and `s_min * s_max >= 1`.
    pub fn new(freq_hz: Vec<f64>, s_min: Vec<f64>, s_max: Vec<f64>) -> Result<Self, SpectrumError> {
        if freq_hz.is_empty() {
            return Err(SpectrumError::Parameter("empty frequency grid".into()));
        }
        if freq_hz.len() != s_min.len() || freq_hz.len() != s_max.len() {
            return Err(SpectrumError::Parameter("grid and variance lengths differ".into()));
        }
        if !freq_hz.iter().all(|f| f.is_finite() && *f >= 0.0) {
            return Err(SpectrumError::Parameter("grid must be finite and nonnegative".into()));
        }
        if freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectrumError::Parameter("grid must be strictly increasing".into()));
        }
        for (i, (&a, &b)) in s_min.iter().zip(&s_max).enumerate() {
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                return Err(SpectrumError::Parameter(format!("nonpositive variance at index {i}")));
            }
            if a > b * (1.0 + INVARIANT_TOL) {
                return Err(SpectrumError::Parameter(format!("s_min > s_max at index {i}")));
            }
            if a * b < 1.0 - INVARIANT_TOL {
                return Err(SpectrumError::Parameter(format!("uncertainty product {} < 1 at index {i}", a * b)));
            }
        }
        Ok(Self { freq_hz, s_min, s_max })
    }

    /// Shot-noise (vacuum) spectrum on the given grid.
    pub fn vacuum(freq_hz: Vec<f64>) -> Result<Self, SpectrumError> {
        let n = freq_hz.len();
        Self::new(freq_hz, vec![1.0; n], vec![1.0; n])
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn s_min(&self) -> &[f64] {
        &self.s_min
    }

    pub fn s_max(&self) -> &[f64] {
        &self.s_max
    }

    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    /// Variance at phase `theta` on every grid point (no interpolation).
    pub fn at_phase(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        self.s_min.iter().zip(&self.s_max).map(|(a, b)| a * c2 + b * s2).collect()
    }

    /// Writes the `freq_hz,s_min,s_max` table. Values use the shortest
    /// representation that parses back to the identical double.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,s_min,s_max\n");
        for i in 0..self.len() {
            out.push_str(&format!("{},{},{}\n", self.freq_hz[i], self.s_min[i], self.s_max[i]));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SpectrumError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "freq_hz,s_min,s_max" => {}
            other => return Err(SpectrumError::Format(format!("bad header {other:?}"))),
        }
        let (mut f, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(SpectrumError::Format(format!("row {} has {} columns", lineno + 2, cols.len())));
            }
            let parse =
                |s: &str| s.parse::<f64>().map_err(|e| SpectrumError::Format(format!("row {}: {e}", lineno + 2)));
            f.push(parse(cols[0])?);
            a.push(parse(cols[1])?);
            b.push(parse(cols[2])?);
        }
        Self::new(f, a, b)
    }
}

/// Below-threshold degenerate parametric oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoSource {
    /// Normalized pump amplitude `x = sqrt(P/P_th)`, in `[0, 1)`.
    pub pump_param: f64,
    /// Escape efficiency times downstream detection efficiency, in `(0, 1]`.
    pub escape_eff: f64,
    /// Cavity half width. Sideband frequencies are divided by this value as is,
    /// so it must be given in the same unit as the frequency grid.
    pub cavity_hwhm: f64,
}

impl OpoSource {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        let x = self.pump_param;
        if !(x.is_finite() && x >= 0.0) {
            return Err(SpectrumError::Parameter(format!("pump parameter {x} must be >= 0")));
        }
        if x >= 1.0 {
            return Err(SpectrumError::AboveThreshold(x));
        }
        if !(self.escape_eff > 0.0 && self.escape_eff <= 1.0) {
            return Err(SpectrumError::Parameter(format!("escape efficiency {} outside (0, 1]", self.escape_eff)));
        }
        if !(self.cavity_hwhm.is_finite() && self.cavity_hwhm > 0.0) {
            return Err(SpectrumError::Parameter("cavity half width must be > 0".into()));
        }
        Ok(())
    }

    /// Quadrature variances `(s_min, s_max)` at a single sideband frequency.
    pub fn variances(&self, freq: f64) -> (f64, f64) {
        let x = self.pump_param;
        let eta = self.escape_eff;
        let r = freq / self.cavity_hwhm;
        let r2 = r * r;
        let s_max = 1.0 + eta * 4.0 * x / ((1.0 - x).powi(2) + r2);
        let s_min = 1.0 - eta * 4.0 * x / ((1.0 + x).powi(2) + r2);
        (s_min, s_max)
    }
}

/// Evaluates the source on a frequency grid.
pub fn make_opo_spectrum(source: &OpoSource, freq_hz: &[f64]) -> Result<QuadSpectrum, SpectrumError> {
    source.validate()?;
    let (a, b): (Vec<f64>, Vec<f64>) = freq_hz.iter().map(|&f| source.variances(f)).unzip();
    QuadSpectrum::new(freq_hz.to_vec(), a, b)
}

/// Solves the low-frequency limit of the source for pump parameter and
/// efficiency, given target anti-squeezing and squeezing levels in dB.
/// Returns `(pump_param, escape_eff)`.
pub fn calibrate_opo(target_max_db: f64, target_min_db: f64) -> Result<(f64, f64), SpectrumError> {
    if !(target_max_db > 0.0 && target_min_db < 0.0) {
        return Err(SpectrumError::Infeasible(format!(
            "need anti-squeezing > 0 dB and squeezing < 0 dB, got {target_max_db} / {target_min_db}"
        )));
    }
    // Excesses a = s_max - 1 and b = 1 - s_min, computed without cancellation.
    let k = std::f64::consts::LN_10 / 10.0;
    let a = (target_max_db * k).exp_m1();
    let b = -(target_min_db * k).exp_m1();
    // a = 4ηx/(1-x)², b = 4ηx/(1+x)², so a/b = r² with r = (1+x)/(1-x).
    let r = (a / b).sqrt();
    let x = (a - b) / (b * (r + 1.0).powi(2));
    if !(x > 0.0 && x < 1.0) {
        return Err(SpectrumError::Infeasible(format!(
            "targets {target_max_db} / {target_min_db} dB imply pump parameter {x}"
        )));
    }
    let mut eta = a * (1.0 - x).powi(2) / (4.0 * x);
    if eta > 1.0 && eta < 1.0 + 1e-9 {
        eta = 1.0;
    }
    if eta > 1.0 {
        return Err(SpectrumError::Infeasible(format!(
            "targets {target_max_db} / {target_min_db} dB require efficiency {eta} > 1"
        )));
    }
    Ok((x, eta))
}

/// Mixes the state with vacuum at power transmission `eta`.
pub fn apply_loss(spec: &QuadSpectrum, eta: f64) -> Result<QuadSpectrum, SpectrumError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(SpectrumError::Parameter(format!("loss transmission {eta} outside [0, 1]")));
    }
    let mix = |s: &f64| eta * s + (1.0 - eta);
    Ok(QuadSpectrum {
        freq_hz: spec.freq_hz.clone(),
        s_min: spec.s_min.iter().map(mix).collect(),
        s_max: spec.s_max.iter().map(mix).collect(),
    })
}

/// Complex amplitude response of a linear passive channel, as a function of
/// detuning from the carrier in Hz.
pub trait Transfer {
    fn response(&self, freq_hz: f64) -> Complex64;
}

impl<F: Fn(f64) -> Complex64> Transfer for F {
    fn response(&self, freq_hz: f64) -> Complex64 {
        self(freq_hz)
    }
}

/// Passes the state through a passive filter. Only the power response
/// `|T(f)|²` enters the quadrature variances; the filter must satisfy
/// `T(-f) = conj(T(f))` so that both sidebands see the same gain.
pub fn apply_filter<T: Transfer + ?Sized>(spec: &QuadSpectrum, filter: &T) -> Result<QuadSpectrum, SpectrumError> {
    let mut gains = Vec::with_capacity(spec.len());
    for &f in &spec.freq_hz {
        let t = filter.response(f);
        let tm = filter.response(-f);
        if (tm - t.conj()).norm() > INVARIANT_TOL * t.norm().max(f64::MIN_POSITIVE) {
            return Err(SpectrumError::Asymmetric(f));
        }
        let g = t.norm_sqr();
        if !g.is_finite() || g > 1.0 + 1e-12 {
            return Err(SpectrumError::NonPassive { freq_hz: f, gain: g.sqrt() });
        }
        gains.push(g.min(1.0));
    }
    let mix = |(s, g): (&f64, &f64)| g * s + (1.0 - g);
    Ok(QuadSpectrum {
        freq_hz: spec.freq_hz.clone(),
        s_min: spec.s_min.iter().zip(&gains).map(mix).collect(),
        s_max: spec.s_max.iter().zip(&gains).map(mix).collect(),
    })
}

/// Variance at phase `theta` and frequency `freq_hz`, linearly interpolated
/// between grid points.
pub fn quad_at(spec: &QuadSpectrum, theta: f64, freq_hz: f64) -> Result<f64, SpectrumError> {
    let (a, b) = interp_pair(spec, freq_hz)?;
    let (s, c) = theta.sin_cos();
    Ok(a * c * c + b * s * s)
}

fn interp_pair(spec: &QuadSpectrum, freq_hz: f64) -> Result<(f64, f64), SpectrumError> {
    let f = &spec.freq_hz;
    let (lo, hi) = (f[0], f[f.len() - 1]);
    if !(freq_hz >= lo && freq_hz <= hi) {
        return Err(SpectrumError::Range { freq_hz, lo, hi });
    }
    let j = f.partition_point(|&x| x < freq_hz);
    if f[j] == freq_hz {
        return Ok((spec.s_min[j], spec.s_max[j]));
    }
    let i = j - 1;
    let w = (freq_hz - f[i]) / (f[j] - f[i]);
    let lerp = |v: &[f64]| v[i] + w * (v[j] - v[i]);
    Ok((lerp(&spec.s_min), lerp(&spec.s_max)))
}

/// Excess photon flux indicator from two orthogonal quadrature variances:
/// `S(θ) + S(θ + π/2) - 2`, zero for vacuum.
pub fn photon_flux(s_theta: f64, s_theta_perp: f64) -> f64 {
    s_theta + s_theta_perp - 2.0
}

/// Band-averaged excess photon flux of a spectrum over `[f_lo, f_hi]`,
/// using the trapezoid rule on the grid points inside the band.
pub fn band_flux(spec: &QuadSpectrum, f_lo: f64, f_hi: f64) -> Result<f64, SpectrumError> {
    band_average(spec, f_lo, f_hi, photon_flux)
}

/// Band average of `g(s_min, s_max)` over `[f_lo, f_hi]` with interpolated
/// end points.
pub fn band_average(
    spec: &QuadSpectrum,
    f_lo: f64,
    f_hi: f64,
    g: impl Fn(f64, f64) -> f64,
) -> Result<f64, SpectrumError> {
    if !(f_hi > f_lo) {
        return Err(SpectrumError::Parameter(format!("empty band [{f_lo}, {f_hi}]")));
    }
    let mut pts = vec![f_lo];
    pts.extend(spec.freq_hz.iter().copied().filter(|&f| f > f_lo && f < f_hi));
    pts.push(f_hi);
    let vals = pts.iter().map(|&f| interp_pair(spec, f).map(|(a, b)| g(a, b))).collect::<Result<Vec<_>, _>>()?;
    let mut acc = 0.0;
    for k in 1..pts.len() {
        acc += 0.5 * (vals[k] + vals[k - 1]) * (pts[k] - pts[k - 1]);
    }
    Ok(acc / (f_hi - f_lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_fixed_point_of_loss() {
        let v = QuadSpectrum::vacuum(vec![0.0, 1.0, 2.0]).unwrap();
        let out = apply_loss(&v, 0.37).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let src = OpoSource { pump_param: 0.5, escape_eff: 0.8, cavity_hwhm: 1e7 };
        let s = make_opo_spectrum(&src, &[0.0, 1e6, 5e6]).unwrap();
        let out = apply_loss(&s, 0.0).unwrap();
        assert!(out.s_min().iter().chain(out.s_max()).all(|&v| v == 1.0));
    }

    #[test]
    fn above_threshold_is_rejected() {
        let src = OpoSource { pump_param: 1.0, escape_eff: 0.5, cavity_hwhm: 1.0 };
        assert_eq!(make_opo_spectrum(&src, &[0.0]), Err(SpectrumError::AboveThreshold(1.0)));
    }

    #[test]
    fn interpolation_out_of_range() {
        let v = QuadSpectrum::vacuum(vec![0.0, 1.0]).unwrap();
        assert!(matches!(quad_at(&v, 0.0, 1.5), Err(SpectrumError::Range { .. })));
        assert!(matches!(quad_at(&v, 0.0, -0.1), Err(SpectrumError::Range { .. })));
    }

    #[test]
    fn csv_header_checked() {
        assert!(matches!(QuadSpectrum::from_csv("a,b,c\n0,1,1\n"), Err(SpectrumError::Format(_))));
    }

    #[test]
    fn rejects_sub_heisenberg_state() {
        assert!(QuadSpectrum::new(vec![0.0], vec![0.5], vec![1.5]).is_err());
    }
}
