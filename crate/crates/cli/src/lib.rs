//! Experiment harness: configuration, calibration, scenario runs and
//! file-based analysis on top of `sqmem-core`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod scenarios;
pub mod selftest;

use std::path::PathBuf;

use sqmem_core::synth::Scenario;

pub use config::{ConfigError, ExperimentConfig};
pub use error::CliError;
pub use scenarios::OutputFile;

/// Run size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    /// Config as given.
    #[default]
    Desk,
    /// 10^4 measurements per phase and scenario.
    Paper,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig) {
        if self == Scale::Paper {
            cfg.schedule.n_measurements = 10_000;
            cfg.run.sequences = None;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Print the default configuration.
    Defaults,
    Calibrate,
    Spectrum,
    Timeline,
    Analyze {
        shot: Vec<PathBuf>,
        signal: Vec<PathBuf>,
    },
    SelfTest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Defaults => "defaults",
            Command::Calibrate => "calibrate",
            Command::Spectrum => "spectrum",
            Command::Timeline => "timeline",
            Command::Analyze { .. } => "analyze",
            Command::SelfTest => "selftest",
        }
    }
}

/// What a command produced. `files` is empty for commands that only print.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<OutputFile>,
    pub manifest: Option<OutputFile>,
    pub failed_checks: usize,
}

impl Outcome {
    fn printed(stdout: String) -> Self {
        Self { stdout, files: Vec::new(), manifest: None, failed_checks: 0 }
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().chain(self.manifest.as_ref()).find(|f| f.name == name)
    }
}

/// Scenarios run by `timeline`, besides the shot reference.
pub const TIMELINE_SCENARIOS: [Scenario; 3] = [Scenario::SourceOnly, Scenario::EitDelay, Scenario::StoreRetrieve];

fn finish(
    command: &Command,
    scale: Scale,
    cfg: &ExperimentConfig,
    stdout: String,
    mut files: Vec<OutputFile>,
) -> Outcome {
    files.push(OutputFile::text("config.txt", cfg.to_text()));
    let manifest = manifest::manifest(command.name(), scale.name(), cfg, &files);
    Outcome { stdout, files, manifest: Some(manifest), failed_checks: 0 }
}

/// Runs `command` without touching the filesystem except to read analyze
/// inputs. The written `config.txt` has every calibrated value pinned.
pub fn execute(command: &Command, cfg: &ExperimentConfig, scale: Scale) -> Result<Outcome, CliError> {
    let mut cfg = cfg.clone();
    scale.apply(&mut cfg);
    cfg.validate()?;
    match command {
        Command::Defaults => Ok(Outcome::printed(ExperimentConfig::default().to_text())),
        Command::SelfTest => {
            let (text, failed) = selftest::run();
            Ok(Outcome { failed_checks: failed, ..Outcome::printed(text) })
        }
        Command::Calibrate => {
            let cal = pipeline::calibrate(&cfg)?;
            let report = pipeline::calibration_report(&cfg, &cal);
            let files = vec![OutputFile::text("calibration.txt", report.clone())];
            Ok(finish(command, scale, &pipeline::pinned(&cfg, &cal), report, files))
        }
        Command::Spectrum => {
            let cal = pipeline::calibrate(&cfg)?;
            let data = scenarios::simulate_spectrum(&cfg, &cal)?;
            let summary = scenarios::spectrum_summary_text(&cfg, &cal, &data);
            let mut files = scenarios::spectrum_files(&data);
            files.push(OutputFile::text("summary.txt", summary.clone()));
            Ok(finish(command, scale, &pipeline::pinned(&cfg, &cal), summary, files))
        }
        Command::Timeline => {
            let cal = pipeline::calibrate(&cfg)?;
            let cfg = pipeline::pinned(&cfg, &cal);
            let setup = pipeline::sequence_setup(&cfg, &cal.source, cal.medium, cal.channel)?;
            let mut traces = Vec::new();
            let sink = cfg.run.write_traces.then_some(&mut traces);
            let data = scenarios::simulate_timeline(&cfg, &setup, &TIMELINE_SCENARIOS, sink)?;
            let summary = scenarios::summarize(&data, cfg.channel.t_off, cfg.channel.t_on);
            let text = scenarios::timeline_summary_text(&data, &summary);
            let mut files = scenarios::timeline_files(&data);
            files.push(OutputFile::text("summary.txt", text.clone()));
            files.extend(traces);
            Ok(finish(command, scale, &cfg, text, files))
        }
        Command::Analyze { shot, signal } => {
            let files = analyze::analyze(&cfg, shot, signal)?;
            let text = files
                .iter()
                .find(|f| f.name == "summary.txt")
                .map(|f| String::from_utf8_lossy(&f.bytes).into_owned())
                .unwrap_or_default();
            Ok(finish(command, scale, &cfg, text, files))
        }
    }
}

/// Reads a config file; a missing path means the defaults.
pub fn load_config(path: Option<&std::path::Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            Ok(ExperimentConfig::parse(&text)?)
        }
    }
}
