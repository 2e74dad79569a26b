//! External-data path: HODT files through the same estimators as the
//! simulator.

use std::path::{Path, PathBuf};

use sqmem_core::analysis::{average_periodogram, AnalysisError};
use sqmem_core::io::{read_hodt_file, spectrum_csv, SpectrumRow};
use sqmem_core::synth::{HomodyneTrace, Scenario};
use sqmem_core::to_db;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::scenarios::{
    check_trace, summarize, timeline_files, timeline_from_sums, timeline_summary_text, Estimators, OutputFile, RunSums,
};

fn read_all(paths: &[PathBuf]) -> Result<Vec<HomodyneTrace>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        let traces = read_hodt_file(p).map_err(|source| CliError::FileFormat { path: p.clone(), source })?;
        out.extend(traces);
    }
    Ok(out)
}

fn phase_slot(cfg: &ExperimentConfig, theta: f64) -> Result<usize, CliError> {
    let (a, b) = cfg.run.lo_phases;
    if (theta - a).abs() < 1e-9 {
        Ok(0)
    } else if (theta - b).abs() < 1e-9 {
        Ok(1)
    } else {
        Err(AnalysisError::Input(format!("LO phase {theta} matches neither run.lo_phases entry ({a}, {b})")).into())
    }
}

/// Periodogram table of one scenario against the shot traces, or `None`
/// when the records are shorter than a segment.
fn spectrum_rows(
    cfg: &ExperimentConfig,
    shot: &[HomodyneTrace],
    pair: &[Vec<HomodyneTrace>; 2],
) -> Result<Option<Vec<SpectrumRow>>, CliError> {
    let seg = cfg.analysis.spectrum_segment;
    if shot[0].len() < seg {
        return Ok(None);
    }
    let reference = average_periodogram(shot, seg)?;
    let level = |set: &Vec<HomodyneTrace>| -> Result<Option<Vec<f64>>, CliError> {
        if set.is_empty() {
            Ok(None)
        } else {
            Ok(Some(average_periodogram(set, seg)?.power))
        }
    };
    let (a, b) = (level(&pair[0])?, level(&pair[1])?);
    let db = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(f64::NAN, |p| to_db(p[k] / reference.power[k]));
    Ok(Some(
        (1..reference.freq_hz.len())
            .map(|k| SpectrumRow {
                freq_hz: reference.freq_hz[k],
                s_min_db: db(&a, k),
                s_max_db: db(&b, k),
                shot_db: to_db(reference.power[k]),
            })
            .collect(),
    ))
}

/// Analyzes signal files against shot files. Every input is read and
/// checked before anything is produced.
pub fn analyze(
    cfg: &ExperimentConfig,
    shot_files: &[PathBuf],
    signal_files: &[PathBuf],
) -> Result<Vec<OutputFile>, CliError> {
    let shot = read_all(shot_files)?;
    let signal = read_all(signal_files)?;
    if shot.len() < 2 {
        return Err(CliError::calibration(
            "shot traces",
            format!("{} vacuum trace(s) given, at least 2 are needed (--shot)", shot.len()),
        ));
    }
    let est = Estimators::new(cfg, shot[0].len(), shot[0].sample_rate, cfg.schedule.trace_start)?;
    let mut shot_sums = est.sums();
    for t in &shot {
        check_trace(&est, t)?;
        shot_sums.add(&est.measure(&t.samples));
    }

    let mut groups: Vec<(Scenario, [Vec<HomodyneTrace>; 2])> = Vec::new();
    for t in signal {
        check_trace(&est, &t)?;
        let slot = phase_slot(cfg, t.lo_phase)?;
        let i = match groups.iter().position(|(s, _)| *s == t.scenario) {
            Some(i) => i,
            None => {
                groups.push((t.scenario, [Vec::new(), Vec::new()]));
                groups.len() - 1
            }
        };
        groups[i].1[slot].push(t);
    }

    let mut runs = Vec::new();
    for (scenario, pair) in &groups {
        let sums = pair.clone().map(|set| {
            (!set.is_empty()).then(|| {
                let mut s: RunSums = est.sums();
                for t in &set {
                    s.add(&est.measure(&t.samples));
                }
                s
            })
        });
        runs.push((*scenario, sums));
    }
    let data = timeline_from_sums(cfg, &est, &shot_sums, runs)?;
    let mut files = timeline_files(&data);
    for (scenario, pair) in &groups {
        if let Some(rows) = spectrum_rows(cfg, &shot, pair)? {
            files.push(OutputFile {
                name: format!("spectrum_{}.csv", scenario.name()),
                bytes: spectrum_csv(&rows).into_bytes(),
            });
        }
    }
    let summary = summarize(&data, cfg.channel.t_off, cfg.channel.t_on);
    files.push(OutputFile { name: "summary.txt".into(), bytes: timeline_summary_text(&data, &summary).into_bytes() });
    Ok(files)
}

/// Convenience for callers holding a single directory of HODT files.
pub fn hodt_files_in(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |source| CliError::Io { path: dir.to_path_buf(), source };
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hodt"))
        .collect();
    v.sort();
    Ok(v)
}
