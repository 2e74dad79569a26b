use std::path::PathBuf;

use sqmem_core::analysis::AnalysisError;
use sqmem_core::io::FormatError;
use sqmem_core::synth::SynthError;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("calibration of `{target}` failed: {detail}")]
    Calibration { target: String, detail: String },
    #[error("format: {0}")]
    Format(#[from] FormatError),
    #[error("{}: {source}", path.display())]
    FileFormat { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("synthesis: {0}")]
    Synthesis(#[from] SynthError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{0} self-test check(s) failed")]
    SelfTest(usize),
}

impl CliError {
    pub fn calibration(target: impl Into<String>, detail: impl ToString) -> Self {
        CliError::Calibration { target: target.into(), detail: detail.to_string() }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Calibration { .. } => 3,
            CliError::Format(_) | CliError::FileFormat { .. } | CliError::Io { .. } => 4,
            CliError::Synthesis(_) | CliError::Analysis(_) | CliError::SelfTest(_) => 1,
        }
    }
}
