use super::{AnalysisError, NoiseEstimate};

/// Excess photon flux of one window: `S(θ) + S(θ + π/2) - 2` in linear
/// units. `display` is clipped at zero; `raw` keeps the estimate as is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxPoint {
    pub raw: f64,
    pub display: f64,
}

impl FluxPoint {
    pub fn new(raw: f64) -> Self {
        Self { raw, display: raw.max(0.0) }
    }
}

pub fn flux_timeline(
    estimates_min: &[NoiseEstimate],
    estimates_max: &[NoiseEstimate],
) -> Result<Vec<FluxPoint>, AnalysisError> {
    if estimates_min.len() != estimates_max.len() {
        return Err(AnalysisError::Input(format!(
            "window grids differ: {} vs {} entries",
            estimates_min.len(),
            estimates_max.len()
        )));
    }
    estimates_min
        .iter()
        .zip(estimates_max)
        .map(|(a, b)| {
            if a.descriptor != b.descriptor {
                return Err(AnalysisError::Input(format!("window mismatch: {} vs {}", a.descriptor, b.descriptor)));
            }
            Ok(FluxPoint::new(a.linear() + b.linear() - 2.0))
        })
        .collect()
}

/// Lag (s) maximizing the cross-correlation of `delayed` against
/// `reference`, both sampled every `step` seconds, refined by a parabola
/// through the peak and its neighbours.
pub fn timeline_lag(reference: &[f64], delayed: &[f64], step: f64) -> Result<f64, AnalysisError> {
    let n = reference.len();
    if n < 3 || delayed.len() != n {
        return Err(AnalysisError::Input("timelines must have equal length >= 3".into()));
    }
    let corr = |lag: i64| -> f64 {
        (0..n as i64)
            .filter_map(|i| {
                let j = i + lag;
                (j >= 0 && j < n as i64).then(|| reference[i as usize] * delayed[j as usize])
            })
            .sum()
    };
    let max_lag = n as i64 - 1;
    let lags: Vec<i64> = (-max_lag..=max_lag).collect();
    let c: Vec<f64> = lags.iter().map(|&l| corr(l)).collect();
    let ipk = c.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty");
    let mut shift = 0.0;
    if ipk > 0 && ipk + 1 < c.len() {
        let (a, b, d) = (c[ipk - 1], c[ipk], c[ipk + 1]);
        let den = a - 2.0 * b + d;
        if den < 0.0 {
            shift = 0.5 * (a - d) / den;
        }
    }
    Ok((lags[ipk] as f64 + shift) * step)
}
