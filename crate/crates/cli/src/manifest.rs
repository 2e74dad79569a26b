//! Output writing and the run manifest.

use std::path::Path;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::scenarios::OutputFile;

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Manifest listing every file with its size and SHA-256, plus what is
/// needed to reproduce the run. No timestamps or host details, so equal
/// inputs give an equal manifest.
pub fn manifest(command: &str, scale: &str, cfg: &ExperimentConfig, files: &[OutputFile]) -> OutputFile {
    let mut listed: Vec<&OutputFile> = files.iter().collect();
    listed.sort_by(|a, b| a.name.cmp(&b.name));
    let value = json!({
        "tool": "sqmem",
        "cli_version": env!("CARGO_PKG_VERSION"),
        "core_version": sqmem_core::VERSION,
        "command": command,
        "scale": scale,
        "seed": cfg.run.seed,
        "config_sha256": sha256_hex(cfg.to_text().as_bytes()),
        "files": listed
            .iter()
            .map(|f| json!({ "name": f.name, "bytes": f.bytes.len(), "sha256": sha256_hex(&f.bytes) }))
            .collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&value).expect("manifest serializes");
    text.push('\n');
    OutputFile { name: MANIFEST_NAME.into(), bytes: text.into_bytes() }
}

/// Writes every file, then the manifest, into `dir`.
pub fn write_outputs(dir: &Path, files: &[OutputFile], manifest: &OutputFile) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    for f in files.iter().chain(std::iter::once(manifest)) {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.bytes).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(())
}
