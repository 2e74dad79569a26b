use std::path::{Path, PathBuf};
use std::process::Command as Process;

use sqmem_cli::config::ExperimentConfig;
use sqmem_cli::manifest::{sha256_hex, write_outputs};
use sqmem_cli::{execute, CliError, Command, Outcome, Scale};
use sqmem_core::io::{parse_timeline_csv, TimelineRow};

fn small(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("run.sequences = 60\n{text}")).unwrap()
}

fn rows(out: &Outcome, name: &str) -> Vec<TimelineRow> {
    let f = out.file(name).unwrap_or_else(|| panic!("{name} missing"));
    parse_timeline_csv(std::str::from_utf8(&f.bytes).unwrap()).unwrap()
}

fn write(out: &Outcome, dir: &Path) {
    write_outputs(dir, &out.files, out.manifest.as_ref().unwrap()).unwrap();
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_sqmem"))
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small("");
    let a = execute(&Command::Timeline, &cfg, Scale::Desk).unwrap();
    let b = execute(&Command::Timeline, &cfg, Scale::Desk).unwrap();
    assert_eq!(a, b);

    let mut other = cfg.clone();
    other.run.seed += 1;
    let c = execute(&Command::Timeline, &other, Scale::Desk).unwrap();
    assert_ne!(a.file("timeline_window_source.csv"), c.file("timeline_window_source.csv"));
}

#[test]
fn manifest_lists_every_file() {
    let out = execute(&Command::Calibrate, &ExperimentConfig::default(), Scale::Desk).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&out.manifest.as_ref().unwrap().bytes).unwrap();
    let listed = manifest["files"].as_array().unwrap();
    assert_eq!(listed.len(), out.files.len());
    for f in &out.files {
        let entry = listed.iter().find(|e| e["name"] == f.name.as_str()).unwrap();
        assert_eq!(entry["sha256"], sha256_hex(&f.bytes).as_str());
        assert_eq!(entry["bytes"], f.bytes.len());
    }
    assert_eq!(manifest["command"], "calibrate");
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn written_config_reproduces_the_run() {
    let first = execute(&Command::Timeline, &small(""), Scale::Desk).unwrap();
    let text = std::str::from_utf8(&first.file("config.txt").unwrap().bytes).unwrap();
    let pinned = ExperimentConfig::parse(text).unwrap();
    assert!(pinned.channel.eta0.is_some() && pinned.medium.control_rabi.is_some());
    let second = execute(&Command::Timeline, &pinned, Scale::Desk).unwrap();
    assert_eq!(first, second);
}

#[test]
fn analyze_matches_in_process_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("run.write_traces = true\n");
    let sim = execute(&Command::Timeline, &cfg, Scale::Desk).unwrap();
    write(&sim, dir.path());

    let pinned = ExperimentConfig::parse(std::str::from_utf8(&sim.file("config.txt").unwrap().bytes).unwrap()).unwrap();
    let root = dir.path();
    let signal: Vec<PathBuf> = ["source", "delayed", "store_retrieve"]
        .iter()
        .flat_map(|s| (0..2).map(move |k| root.join(format!("traces_{s}_{k}.hodt"))))
        .collect();
    let cmd = Command::Analyze { shot: vec![dir.path().join("traces_vacuum.hodt")], signal };
    let ana = execute(&cmd, &pinned, Scale::Desk).unwrap();
    for f in sim.files.iter().filter(|f| f.name.starts_with("timeline_") || f.name == "summary.txt") {
        assert_eq!(ana.file(&f.name), Some(f), "{}", f.name);
    }
}

#[test]
fn shot_against_itself_is_zero_db() {
    let dir = tempfile::tempdir().unwrap();
    let sim = execute(&Command::Timeline, &small("run.write_traces = true\n"), Scale::Desk).unwrap();
    write(&sim, dir.path());
    let shot = dir.path().join("traces_vacuum.hodt");
    let cmd = Command::Analyze { shot: vec![shot.clone()], signal: vec![shot] };
    let out = execute(&cmd, &small(""), Scale::Desk).unwrap();
    for name in ["timeline_window_vacuum.csv", "timeline_mode_vacuum.csv"] {
        let r = rows(&out, name);
        assert!(!r.is_empty());
        assert!(r.iter().all(|row| row.s_min_db == 0.0), "{name}");
        // The second phase slot was never recorded.
        assert!(r.iter().all(|row| row.s_max_db.is_nan()), "{name}");
    }
}

#[test]
fn empty_memory_emits_nothing_after_switch_off() {
    let cfg = ExperimentConfig::parse("run.sequences = 1000\nchannel.eta0 = 0\nschedule.tail_leak = 0\n").unwrap();
    let out = execute(&Command::Timeline, &cfg, Scale::Desk).unwrap();
    let ret = rows(&out, "timeline_window_store_retrieve.csv");
    let after: Vec<&TimelineRow> = ret.iter().filter(|r| r.t_center_s - 320e-9 >= cfg.channel.t_off).collect();
    assert!(after.len() >= 10);
    let mean = after.iter().map(|r| r.flux).sum::<f64>() / after.len() as f64;
    // Per-window flux noise is about 0.02 at this trial count.
    assert!(mean.abs() < 0.01, "mean flux after switch-off {mean}");
    let peak = rows(&out, "timeline_window_delayed.csv").iter().map(|r| r.flux).fold(0.0, f64::max);
    assert!(after.iter().all(|r| r.flux.abs() < 0.25 * peak), "peak delayed flux {peak}");
}

#[test]
fn truncated_trace_file_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let sim = execute(&Command::Timeline, &small("run.write_traces = true\n"), Scale::Desk).unwrap();
    write(&sim, dir.path());
    let shot = dir.path().join("traces_vacuum.hodt");
    let bytes = std::fs::read(&shot).unwrap();
    let cut = dir.path().join("cut.hodt");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();

    let err =
        execute(&Command::Analyze { shot: vec![shot.clone()], signal: vec![cut.clone()] }, &small(""), Scale::Desk)
            .unwrap_err();
    assert!(matches!(&err, CliError::FileFormat { path, .. } if *path == cut), "{err:?}");
    assert_eq!(err.exit_code(), 4);

    let out_dir = dir.path().join("analysis");
    let status = bin().args(["analyze", "--shot"]).arg(&shot).arg(&cut).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(status.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&status.stderr).contains("cut.hodt"));
    assert!(!out_dir.exists());
}

#[test]
fn missing_shot_traces_is_a_calibration_error() {
    let dir = tempfile::tempdir().unwrap();
    let sim = execute(&Command::Timeline, &small("run.write_traces = true\n"), Scale::Desk).unwrap();
    write(&sim, dir.path());
    let one = dir.path().join("one.hodt");
    let bytes = std::fs::read(dir.path().join("traces_vacuum.hodt")).unwrap();
    let records = sqmem_core::io::decode_traces(&bytes).unwrap();
    sqmem_core::io::write_hodt_file(&one, &records[..1]).unwrap();
    let cmd = Command::Analyze { shot: vec![one], signal: vec![dir.path().join("traces_source_0.hodt")] };
    match execute(&cmd, &small(""), Scale::Desk).unwrap_err() {
        CliError::Calibration { target, .. } => assert_eq!(target, "shot traces"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");

    std::fs::write(&cfg, "channel.t_off = 1e-6\nchannel.t_on = 1e-7\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("calibrate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("channel.t_on"));

    std::fs::write(&cfg, "channel.flux_ratio_target = 1\n").unwrap();
    let out =
        bin().arg("--config").arg(&cfg).args(["--out"]).arg(dir.path().join("o")).arg("calibrate").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("channel.flux_ratio_target"));

    let out = bin().arg("--config").arg(dir.path().join("absent.txt")).arg("calibrate").output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 9 && text.lines().all(|l| l.starts_with("PASS ")), "{text}");

    let out = bin().arg("defaults").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(ExperimentConfig::parse(&String::from_utf8_lossy(&out.stdout)).unwrap(), ExperimentConfig::default());
}

#[test]
fn calibrate_writes_outputs_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cal");
    let out = bin().args(["calibrate", "--seed", "7", "--out"]).arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["calibration.txt", "config.txt", "manifest.json"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let cfg = ExperimentConfig::parse(&std::fs::read_to_string(out_dir.join("config.txt")).unwrap()).unwrap();
    assert_eq!(cfg.run.seed, 7);
}

#[test]
fn paper_scale_sets_the_measurement_count() {
    let mut cfg = small("");
    Scale::Paper.apply(&mut cfg);
    assert_eq!(cfg.schedule.n_measurements, 10_000);
    assert_eq!(cfg.run.sequences, None);
    assert_eq!(cfg.n_sequences(), 10_000 * 90);
}
