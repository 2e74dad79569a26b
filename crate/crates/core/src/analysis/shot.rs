use super::method1::WindowPlan;
use super::method2::ModeProjector;
use super::AnalysisError;
use crate::synth::HomodyneTrace;

/// Statistic whose shot-noise level is calibrated.
#[derive(Debug, Clone)]
pub enum ShotStatistic<'a> {
    /// Band power per window (Method I).
    Windows(&'a WindowPlan),
    /// Second moment of the mode quadrature (Method II).
    Mode(&'a ModeProjector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotCalibration {
    /// Shot level per window index, or a single entry for a mode.
    pub levels: Vec<f64>,
    /// Estimated spread of the per-measurement shot level beyond what
    /// sampling noise explains (dB).
    pub drift_db: f64,
    /// Set when `drift_db` exceeds three times the configured drift sigma.
    pub drift_warning: bool,
}

/// Averages the statistic over all shot traces. Traces are grouped into
/// measurements of `group_size` consecutive traces; the between-group spread
/// minus its sampling contribution estimates the LO power drift.
pub fn shot_calibration(
    shot_traces: &[HomodyneTrace],
    statistic: &ShotStatistic<'_>,
    group_size: usize,
    lo_drift_db_sigma: f64,
) -> Result<ShotCalibration, AnalysisError> {
    if shot_traces.is_empty() {
        return Err(AnalysisError::Input("no shot traces".into()));
    }
    let per_trace: Vec<Vec<f64>> = shot_traces
        .iter()
        .map(|t| match statistic {
            ShotStatistic::Windows(plan) => plan.window_powers(&t.samples),
            ShotStatistic::Mode(p) => vec![p.project(&t.samples).powi(2)],
        })
        .collect();
    let width = per_trace[0].len();
    let mut levels = vec![0.0; width];
    for v in &per_trace {
        for (l, x) in levels.iter_mut().zip(v) {
            *l += x;
        }
    }
    let n = per_trace.len() as f64;
    levels.iter_mut().for_each(|l| *l /= n);

    let scalar: Vec<f64> = per_trace.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let (drift_db, drift_warning) = lo_drift_check(&scalar, group_size, lo_drift_db_sigma);
    Ok(ShotCalibration { levels, drift_db, drift_warning })
}

/// Drift excess (dB) of per-trace shot statistics grouped into measurements
/// of `group_size` traces, and whether it exceeds three times the budgeted
/// sigma.
pub fn lo_drift_check(per_trace: &[f64], group_size: usize, lo_drift_db_sigma: f64) -> (f64, bool) {
    let drift_db = drift_excess_db(per_trace, group_size.max(1));
    let warn = drift_db > 3.0 * lo_drift_db_sigma;
    if warn {
        log::warn!("shot level drifts by {drift_db:.4} dB across measurements (budget {lo_drift_db_sigma} dB)");
    }
    (drift_db, warn)
}

fn drift_excess_db(x: &[f64], m: usize) -> f64 {
    let groups: Vec<&[f64]> = x.chunks_exact(m).collect();
    if groups.len() < 2 || m < 2 {
        return 0.0;
    }
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / m as f64).collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let between = means.iter().map(|v| (v - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    let within = groups
        .iter()
        .zip(&means)
        .map(|(g, mu)| g.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1) as f64)
        .sum::<f64>()
        / groups.len() as f64;
    let excess = (between - within / m as f64).max(0.0);
    crate::to_db(1.0 + excess.sqrt() / grand)
}
