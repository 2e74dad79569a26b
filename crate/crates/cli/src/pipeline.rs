//! Calibration chain: source levels, then the medium, then the storage
//! channel, each either taken from the config or fitted to its targets.

use sqmem_core::expectation::RetrievalFluxModel;
use sqmem_core::medium::{eit_fwhm, fit_medium, EitMedium, MediumError};
use sqmem_core::spectra::{calibrate_opo, make_opo_spectrum, OpoSource, QuadSpectrum};
use sqmem_core::storage::{storage_channel, StorageChannel, StorageError};
use sqmem_core::synth::{bin_frequencies, SequenceSetup};
use sqmem_core::to_db;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub source: OpoSource,
    pub source_fitted: bool,
    pub medium: EitMedium,
    pub medium_fitted: bool,
    /// `None` when the medium has no control field.
    pub delay_s: Option<f64>,
    /// `None` when the window is wider than the design grid.
    pub fwhm_hz: Option<f64>,
    pub channel: StorageChannel,
    pub channel_fitted: bool,
    /// Expected Method II peak flux ratio of the final channel.
    pub flux_ratio: f64,
}

impl Calibration {
    pub fn source_levels_db(&self) -> (f64, f64) {
        let (s_min, s_max) = self.source.variances(0.0);
        (to_db(s_max), to_db(s_min))
    }

    pub fn storage_efficiency(&self) -> f64 {
        self.channel.efficiency(self.channel.storage_time())
    }
}

pub fn design_spectrum(cfg: &ExperimentConfig, source: &OpoSource) -> Result<QuadSpectrum, CliError> {
    make_opo_spectrum(source, &cfg.design_grid()).map_err(|e| CliError::calibration("source", e))
}

fn calibrate_source(cfg: &ExperimentConfig) -> Result<(OpoSource, bool), CliError> {
    let s = &cfg.source;
    let (x, eta, fitted) = match (s.pump_param, s.escape_eff) {
        (Some(x), Some(eta)) => (x, eta, false),
        _ => {
            let (x, eta) = calibrate_opo(s.max_db, s.min_db)
                .map_err(|e| CliError::calibration("source.max_db, source.min_db", e))?;
            (x, eta, true)
        }
    };
    let src = OpoSource { pump_param: x, escape_eff: eta, cavity_hwhm: s.cavity_hwhm };
    src.validate().map_err(|e| CliError::calibration("source", e))?;
    Ok((src, fitted))
}

fn medium_error(e: MediumError) -> CliError {
    match e {
        MediumError::Infeasible { target: "delay", detail } => CliError::calibration("medium.delay_target", detail),
        MediumError::Infeasible { target: "fwhm", detail } => CliError::calibration("medium.fwhm_target", detail),
        other => CliError::calibration("medium", other),
    }
}

/// Setup for pulse sequences: the source spectrum sampled on the synthesis
/// bin grid, the medium and the given channel.
pub fn sequence_setup(
    cfg: &ExperimentConfig,
    source: &OpoSource,
    medium: EitMedium,
    channel: StorageChannel,
) -> Result<SequenceSetup, CliError> {
    let schedule = cfg.schedule();
    let fs = cfg.run.sample_rate;
    let n = schedule.n_samples(fs);
    let spec = make_opo_spectrum(source, &bin_frequencies(n, fs)).map_err(|e| CliError::calibration("source", e))?;
    Ok(SequenceSetup { source: spec, medium, channel, schedule, sample_rate: fs })
}

pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration, CliError> {
    let (source, source_fitted) = calibrate_source(cfg)?;
    let design = design_spectrum(cfg, &source)?;
    let m = &cfg.medium;

    let (medium, medium_fitted, delay_s, fwhm_hz) = match (m.control_rabi, m.ground_decoherence) {
        (Some(rabi), Some(gamma)) => {
            let medium = EitMedium::new(m.optical_depth, m.linewidth, rabi, gamma).map_err(medium_error)?;
            (medium, false, medium.group_delay().ok(), eit_fwhm(&medium, &design).ok())
        }
        _ => {
            let fit = fit_medium(m.optical_depth, m.linewidth, m.delay_target, m.fwhm_target, &design, m.fit)
                .map_err(medium_error)?;
            (fit.medium, true, Some(fit.delay_s), Some(fit.fwhm_hz))
        }
    };

    let template = cfg.channel_template();
    let setup = sequence_setup(cfg, &source, medium, template)?;
    let model =
        RetrievalFluxModel::new(&setup, cfg.analysis.mode_tau, cfg.analysis.mode_window, cfg.analysis.mode_step)
            .map_err(|e| CliError::calibration("channel", e))?;
    let (channel, channel_fitted) = match cfg.channel.eta0 {
        Some(_) => (template, false),
        None => {
            let ch =
                storage_channel(template, cfg.channel.flux_ratio_target, |e| model.ratio(e)).map_err(|e| match e {
                    StorageError::Infeasible { target, max } => CliError::calibration(
                        "channel.flux_ratio_target",
                        format!("target {target} exceeds the largest reachable ratio {max:.4}"),
                    ),
                    other => CliError::calibration("channel", other),
                })?;
            (ch, true)
        }
    };
    let flux_ratio = model.ratio(channel.efficiency(channel.storage_time()));
    Ok(Calibration {
        source,
        source_fitted,
        medium,
        medium_fitted,
        delay_s,
        fwhm_hz,
        channel,
        channel_fitted,
        flux_ratio,
    })
}

fn residual(value: f64, target: f64) -> String {
    format!("{:+.4}%", 100.0 * (value / target - 1.0))
}

/// `key = value` lines for every calibrated quantity, with targets and
/// relative residuals as comments. The key lines can be pasted into a config.
pub fn calibration_report(cfg: &ExperimentConfig, cal: &Calibration) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let how = |fitted: bool| if fitted { "fitted" } else { "from config" };
    let (max_db, min_db) = cal.source_levels_db();
    line(format!(
        "# source ({}): levels {max_db:.6} / {min_db:.6} dB, targets {} / {} dB",
        how(cal.source_fitted),
        cfg.source.max_db,
        cfg.source.min_db
    ));
    line(format!("source.pump_param = {}", cal.source.pump_param));
    line(format!("source.escape_eff = {}", cal.source.escape_eff));

    let m = &cfg.medium;
    match cal.delay_s {
        Some(d) => line(format!(
            "# medium ({}): delay {d:.6e} s, target {:e} s, residual {}",
            how(cal.medium_fitted),
            m.delay_target,
            residual(d, m.delay_target)
        )),
        None => line(format!("# medium ({}): no group delay without control field", how(cal.medium_fitted))),
    }
    match cal.fwhm_hz {
        Some(w) => line(format!(
            "# window FWHM {w:.6e} Hz, target {:e} Hz, residual {}",
            m.fwhm_target,
            residual(w, m.fwhm_target)
        )),
        None => line("# window FWHM wider than the design grid".into()),
    }
    line(format!("medium.control_rabi = {}", cal.medium.control_rabi));
    line(format!("medium.ground_decoherence = {}", cal.medium.ground_decoherence));

    let c = &cfg.channel;
    line(format!(
        "# channel ({}): peak flux ratio {:.6}, target {}, residual {}; efficiency after {:e} s storage {:.6}",
        how(cal.channel_fitted),
        cal.flux_ratio,
        c.flux_ratio_target,
        residual(cal.flux_ratio, c.flux_ratio_target),
        cal.channel.storage_time(),
        cal.storage_efficiency()
    ));
    line(format!(
        "# memory decay time {:e} s; coherence time estimate {:e} s (not used by the model)",
        c.decay_time, c.coherence_time
    ));
    line(format!("channel.eta0 = {}", cal.channel.eta0));
    out
}

/// Copy of `cfg` with every calibrated quantity fixed to its fitted value.
pub fn pinned(cfg: &ExperimentConfig, cal: &Calibration) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.source.pump_param = Some(cal.source.pump_param);
    c.source.escape_eff = Some(cal.source.escape_eff);
    c.medium.control_rabi = Some(cal.medium.control_rabi);
    c.medium.ground_decoherence = Some(cal.medium.ground_decoherence);
    c.channel.eta0 = Some(cal.channel.eta0);
    c
}
