//! Scenario runs: synthesis, estimation and the tables they emit.

use sqmem_core::analysis::{
    average_periodogram, flux_timeline, lo_drift_check, timeline_lag, FluxPoint, ModeProjector, ModeSums,
    NoiseEstimate, WindowPlan, WindowSums,
};
use sqmem_core::io::{encode_trace, spectrum_csv, timeline_csv, SpectrumRow, TimelineRow};
use sqmem_core::spectra::{apply_filter, make_opo_spectrum};
use sqmem_core::synth::{
    bin_frequencies, build_sequence_operator, drift_tag, stationary_operator, Ensemble, HomodyneTrace, Scenario,
    SequenceOperator, SequenceSetup,
};
use sqmem_core::to_db;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::pipeline::Calibration;

/// Sequences synthesized per parallel batch.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn text(name: impl Into<String>, text: String) -> Self {
        Self { name: name.into(), bytes: text.into_bytes() }
    }
}

/// Per-trace statistics of both estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub powers: Vec<f64>,
    pub q: Vec<f64>,
}

/// Window plan and mode projectors for records of one length and start time.
#[derive(Debug, Clone)]
pub struct Estimators {
    pub plan: Option<WindowPlan>,
    pub t0: Vec<f64>,
    pub t0_offset: f64,
    pub n_samples: usize,
    pub sample_rate: f64,
    projectors: Vec<ModeProjector>,
    descriptors: Vec<String>,
}

impl Estimators {
    pub fn new(cfg: &ExperimentConfig, n_samples: usize, sample_rate: f64, t0_offset: f64) -> Result<Self, CliError> {
        let a = &cfg.analysis;
        let plan =
            if a.methods.window() { Some(WindowPlan::new(sample_rate, n_samples, &cfg.method1())?) } else { None };
        let mut t0 = Vec::new();
        if a.methods.mode() {
            let end = t0_offset + (n_samples as f64 - 1.0) / sample_rate;
            let mut k = 0u64;
            loop {
                let t = t0_offset + k as f64 * a.mode_step;
                if t + a.mode_window > end + 1e-15 {
                    break;
                }
                t0.push(t);
                k += 1;
            }
        }
        let modes: Vec<_> = t0.iter().map(|&t| cfg.mode(t)).collect();
        let projectors = modes
            .iter()
            .map(|m| ModeProjector::new(m, sample_rate, t0_offset, n_samples))
            .collect::<Result<Vec<_>, _>>()?;
        let descriptors = modes.iter().map(|m| m.descriptor()).collect();
        Ok(Self { plan, t0, t0_offset, n_samples, sample_rate, projectors, descriptors })
    }

    pub fn measure(&self, x: &[f64]) -> Measurement {
        Measurement {
            powers: self.plan.as_ref().map(|p| p.window_powers(x)).unwrap_or_default(),
            q: self.projectors.iter().map(|p| p.project(x)).collect(),
        }
    }

    pub fn sums(&self) -> RunSums {
        RunSums {
            windows: self.plan.as_ref().map(|p| WindowSums::new(p.n_windows)),
            modes: (!self.t0.is_empty()).then(|| ModeSums::new(self.t0.len())),
            shot_scalars: Vec::new(),
        }
    }

    /// Start time of Method I window `j`.
    pub fn window_start(&self, j: usize) -> f64 {
        let m = self.plan.as_ref().map_or(0, |p| p.n_per_window);
        self.t0_offset + (j * m) as f64 / self.sample_rate
    }

    fn check(&self, trace: &HomodyneTrace) -> Result<(), CliError> {
        if trace.sample_rate != self.sample_rate || trace.len() != self.n_samples {
            return Err(CliError::Analysis(sqmem_core::analysis::AnalysisError::Input(format!(
                "trace of {} samples at {} S/s, expected {} at {}",
                trace.len(),
                trace.sample_rate,
                self.n_samples,
                self.sample_rate
            ))));
        }
        Ok(())
    }
}

/// Ordered running sums of one run (scenario and LO phase).
#[derive(Debug, Clone, PartialEq)]
pub struct RunSums {
    pub windows: Option<WindowSums>,
    pub modes: Option<ModeSums>,
    /// Per-trace shot statistic, kept for the drift check.
    pub shot_scalars: Vec<f64>,
}

impl RunSums {
    pub fn add(&mut self, m: &Measurement) {
        if let Some(w) = &mut self.windows {
            w.add(&m.powers);
            self.shot_scalars.push(m.powers.iter().sum::<f64>() / m.powers.len() as f64);
        } else if let Some(first) = m.q.first() {
            self.shot_scalars.push(first * first);
        }
        if let Some(s) = &mut self.modes {
            s.add(&m.q);
        }
    }

    pub fn n_trials(&self) -> usize {
        self.shot_scalars.len()
    }
}

/// Synthesizes `n` sequences of one run and folds them into `sums` in
/// sequence order. With `traces` set, every trace is also HODT-encoded.
#[allow(clippy::too_many_arguments)]
pub fn run_sequences(
    cfg: &ExperimentConfig,
    est: &Estimators,
    operator: &SequenceOperator,
    scenario: Scenario,
    theta: f64,
    n: usize,
    sums: &mut RunSums,
    mut traces: Option<&mut Vec<u8>>,
) -> Result<(), CliError> {
    let budget = cfg.budget();
    let mut start = 0;
    while start < n {
        let len = CHUNK.min(n - start);
        let ens = Ensemble {
            operator,
            budget: &budget,
            root_seed: cfg.run.seed,
            first_stream: start as u64,
            n_sequences: len,
            sequences_per_measurement: cfg.schedule.sequences_per_measurement,
            sample_rate: est.sample_rate,
            lo_phase: theta,
            scenario,
            t0_offset: est.t0_offset,
            drift_tag: drift_tag(scenario, theta),
            full_scale: None,
        };
        let write = traces.is_some();
        let batch = ens.map(|_, t| {
            let mut bytes = Vec::new();
            if write {
                encode_trace(t, &mut bytes);
            }
            (est.measure(&t.samples), bytes)
        })?;
        for (m, bytes) in &batch {
            sums.add(m);
            if let Some(buf) = traces.as_deref_mut() {
                buf.extend_from_slice(bytes);
            }
        }
        start += len;
    }
    Ok(())
}

/// Estimates of one scenario at the two LO phases; a phase without data is
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTimeline {
    pub scenario: Scenario,
    pub window: [Option<Vec<NoiseEstimate>>; 2],
    pub mode: [Option<Vec<NoiseEstimate>>; 2],
}

fn flux_of(pair: &[Option<Vec<NoiseEstimate>>; 2]) -> Option<Vec<FluxPoint>> {
    match pair {
        [Some(a), Some(b)] => flux_timeline(a, b).ok(),
        _ => None,
    }
}

impl ScenarioTimeline {
    pub fn window_flux(&self) -> Option<Vec<FluxPoint>> {
        flux_of(&self.window)
    }

    pub fn mode_flux(&self) -> Option<Vec<FluxPoint>> {
        flux_of(&self.mode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineData {
    pub phases: (f64, f64),
    /// Start times of the Method I windows.
    pub window_starts: Vec<f64>,
    pub window_len: f64,
    /// Start times of the Method II modes.
    pub mode_t0: Vec<f64>,
    pub mode_window: f64,
    pub scenarios: Vec<ScenarioTimeline>,
    pub shot_trials: usize,
    pub shot_drift_db: f64,
    pub shot_drift_warning: bool,
}

impl TimelineData {
    pub fn get(&self, scenario: Scenario) -> Option<&ScenarioTimeline> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }
}

/// Normalizes every run against the shot run.
pub fn timeline_from_sums(
    cfg: &ExperimentConfig,
    est: &Estimators,
    shot: &RunSums,
    runs: Vec<(Scenario, [Option<RunSums>; 2])>,
) -> Result<TimelineData, CliError> {
    let sigma = cfg.imperfections.lo_drift_db_sigma;
    let (shot_drift_db, shot_drift_warning) =
        lo_drift_check(&shot.shot_scalars, cfg.schedule.sequences_per_measurement as usize, sigma);
    let mut scenarios = Vec::new();
    for (scenario, pair) in runs {
        let mut window = [None, None];
        let mut mode = [None, None];
        for (k, run) in pair.iter().enumerate() {
            let Some(run) = run else { continue };
            if let (Some(s), Some(r), Some(plan)) = (&run.windows, &shot.windows, &est.plan) {
                window[k] = Some(s.normalized(r, plan, sigma)?);
            }
            if let (Some(s), Some(r)) = (&run.modes, &shot.modes) {
                mode[k] = Some(s.normalized(r, &est.descriptors, sigma)?);
            }
        }
        scenarios.push(ScenarioTimeline { scenario, window, mode });
    }
    let n_windows = est.plan.as_ref().map_or(0, |p| p.n_windows);
    Ok(TimelineData {
        phases: cfg.run.lo_phases,
        window_starts: (0..n_windows).map(|j| est.window_start(j)).collect(),
        window_len: est.plan.as_ref().map_or(0.0, |p| p.n_per_window as f64 / p.sample_rate),
        mode_t0: est.t0.clone(),
        mode_window: cfg.analysis.mode_window,
        scenarios,
        shot_trials: shot.n_trials(),
        shot_drift_db,
        shot_drift_warning,
    })
}

/// Runs the shot reference and every listed scenario at both LO phases.
/// `traces` collects HODT files when the config asks for them.
pub fn simulate_timeline(
    cfg: &ExperimentConfig,
    setup: &SequenceSetup,
    scenarios: &[Scenario],
    mut traces: Option<&mut Vec<OutputFile>>,
) -> Result<TimelineData, CliError> {
    let n = setup.n_samples();
    let est = Estimators::new(cfg, n, setup.sample_rate, setup.schedule.trace_start)?;
    let count = cfg.n_sequences();
    let phases = [cfg.run.lo_phases.0, cfg.run.lo_phases.1];

    let mut run = |scenario: Scenario, theta: f64, file: String| -> Result<RunSums, CliError> {
        log::info!("{} at phase {theta:.4}: {count} sequences", scenario.name());
        let op = build_sequence_operator(setup, scenario, theta)?;
        let mut sums = est.sums();
        let mut buf = Vec::new();
        let sink = traces.is_some().then_some(&mut buf);
        run_sequences(cfg, &est, &op, scenario, theta, count, &mut sums, sink)?;
        if let Some(t) = traces.as_deref_mut() {
            t.push(OutputFile { name: file, bytes: buf });
        }
        Ok(sums)
    };

    let shot = run(Scenario::Vacuum, phases[0], "traces_vacuum.hodt".into())?;
    let mut runs = Vec::new();
    for &s in scenarios.iter().filter(|s| **s != Scenario::Vacuum) {
        let a = run(s, phases[0], format!("traces_{}_0.hodt", s.name()))?;
        let b = run(s, phases[1], format!("traces_{}_1.hodt", s.name()))?;
        runs.push((s, [Some(a), Some(b)]));
    }
    timeline_from_sums(cfg, &est, &shot, runs)
}

/// Headline numbers of a timeline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimelineSummary {
    /// Lag of the delayed flux timeline behind the source one (s).
    pub window_lag_s: Option<f64>,
    pub mode_lag_s: Option<f64>,
    /// Peak store/retrieve flux after switch-off over the peak delayed flux.
    pub window_flux_ratio: Option<f64>,
    pub mode_flux_ratio: Option<f64>,
    /// Method I estimates of the first window starting at switch-on, with
    /// its start time.
    pub retrieved_window: Option<(NoiseEstimate, NoiseEstimate, f64)>,
    /// Method II estimates of the mode starting closest to switch-on.
    pub retrieved_mode: Option<(NoiseEstimate, NoiseEstimate, f64)>,
}

fn peak(x: impl Iterator<Item = f64>) -> f64 {
    x.fold(f64::NEG_INFINITY, f64::max)
}

fn ratio_after(retrieve: &[FluxPoint], delayed: &[FluxPoint], times: &[f64], t_off: f64) -> f64 {
    let r = peak(retrieve.iter().zip(times).filter(|(_, t)| **t >= t_off - 1e-12).map(|(p, _)| p.raw));
    r / peak(delayed.iter().map(|p| p.raw))
}

fn raw(f: &[FluxPoint]) -> Vec<f64> {
    f.iter().map(|p| p.raw).collect()
}

pub fn summarize(data: &TimelineData, t_off: f64, t_on: f64) -> TimelineSummary {
    let mut s = TimelineSummary::default();
    let src = data.get(Scenario::SourceOnly);
    let del = data.get(Scenario::EitDelay);
    let ret = data.get(Scenario::StoreRetrieve);

    if let (Some(a), Some(b)) = (src.and_then(|x| x.window_flux()), del.and_then(|x| x.window_flux())) {
        s.window_lag_s = timeline_lag(&raw(&a), &raw(&b), data.window_len).ok();
    }
    if let (Some(a), Some(b)) = (src.and_then(|x| x.mode_flux()), del.and_then(|x| x.mode_flux())) {
        let step = if data.mode_t0.len() > 1 { data.mode_t0[1] - data.mode_t0[0] } else { 0.0 };
        s.mode_lag_s = timeline_lag(&raw(&a), &raw(&b), step).ok();
    }
    if let (Some(r), Some(d)) = (ret.and_then(|x| x.window_flux()), del.and_then(|x| x.window_flux())) {
        s.window_flux_ratio = Some(ratio_after(&r, &d, &data.window_starts, t_off));
    }
    if let (Some(r), Some(d)) = (ret.and_then(|x| x.mode_flux()), del.and_then(|x| x.mode_flux())) {
        s.mode_flux_ratio = Some(ratio_after(&r, &d, &data.mode_t0, t_off));
    }
    if let Some(ret) = ret {
        if let ([Some(a), Some(b)], Some(j)) = (&ret.window, data.window_starts.iter().position(|t| *t >= t_on - 1e-12))
        {
            s.retrieved_window = Some((a[j].clone(), b[j].clone(), data.window_starts[j]));
        }
        let nearest = data
            .mode_t0
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - t_on).abs().total_cmp(&(y.1 - t_on).abs()))
            .map(|(i, _)| i);
        if let ([Some(a), Some(b)], Some(i)) = (&ret.mode, nearest) {
            s.retrieved_mode = Some((a[i].clone(), b[i].clone(), data.mode_t0[i]));
        }
    }
    s
}

fn rows(pair: &[Option<Vec<NoiseEstimate>>; 2], centers: &[f64]) -> Vec<TimelineRow> {
    let value = |k: usize, j: usize| pair[k].as_ref().map_or(f64::NAN, |v| v[j].value_db);
    let stat = |k: usize, j: usize| pair[k].as_ref().map_or(f64::NAN, |v| v[j].stat_err_db);
    let drift = |j: usize| pair.iter().flatten().map(|v| v[j].lo_drift_err_db).next().unwrap_or(f64::NAN);
    centers
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let (a, b) = (value(0, j), value(1, j));
            TimelineRow {
                window_index: j,
                t_center_s: t,
                s_min_db: a,
                s_max_db: b,
                flux: sqmem_core::from_db(a) + sqmem_core::from_db(b) - 2.0,
                stat_err_db: stat(0, j).max(stat(1, j)),
                lo_err_db: drift(j),
            }
        })
        .collect()
}

/// Method I and Method II timeline tables of every scenario. The time
/// column holds window (or mode integration) centers.
pub fn timeline_files(data: &TimelineData) -> Vec<OutputFile> {
    let window_centers: Vec<f64> = data.window_starts.iter().map(|t| t + 0.5 * data.window_len).collect();
    let mode_centers: Vec<f64> = data.mode_t0.iter().map(|t| t + 0.5 * data.mode_window).collect();
    let mut out = Vec::new();
    for s in &data.scenarios {
        if s.window.iter().any(Option::is_some) {
            out.push(OutputFile::text(
                format!("timeline_window_{}.csv", s.scenario.name()),
                timeline_csv(&rows(&s.window, &window_centers)),
            ));
        }
        if s.mode.iter().any(Option::is_some) {
            out.push(OutputFile::text(
                format!("timeline_mode_{}.csv", s.scenario.name()),
                timeline_csv(&rows(&s.mode, &mode_centers)),
            ));
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.6e}"))
}

fn estimate_pair(v: &Option<(NoiseEstimate, NoiseEstimate, f64)>) -> String {
    match v {
        Some((a, b, t)) => format!(
            "{:.4} / {:.4} dB (stat {:.4} dB, drift {:.4} dB) at {t:.4e} s",
            a.value_db, b.value_db, a.stat_err_db, a.lo_drift_err_db
        ),
        None => "n/a".into(),
    }
}

pub fn timeline_summary_text(data: &TimelineData, s: &TimelineSummary) -> String {
    [
        format!("shot_trials = {}", data.shot_trials),
        format!("shot_drift_db = {:.6}", data.shot_drift_db),
        format!("shot_drift_warning = {}", data.shot_drift_warning),
        format!("window_lag_s = {}", opt(s.window_lag_s)),
        format!("mode_lag_s = {}", opt(s.mode_lag_s)),
        format!("window_flux_ratio = {}", opt(s.window_flux_ratio)),
        format!("mode_flux_ratio = {}", opt(s.mode_flux_ratio)),
        format!("retrieved_window = {}", estimate_pair(&s.retrieved_window)),
        format!("retrieved_mode = {}", estimate_pair(&s.retrieved_mode)),
    ]
    .join("\n")
        + "\n"
}

/// Stationary source and EIT-transmitted spectra with the shot reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumData {
    pub source: Vec<SpectrumRow>,
    pub transmitted: Vec<SpectrumRow>,
    /// Window FWHM of the model on the design grid.
    pub model_fwhm_hz: Option<f64>,
    /// Window FWHM read off the estimated transmitted spectrum.
    pub estimated_fwhm_hz: Option<f64>,
    pub n_segments: usize,
}

fn stationary_power(
    cfg: &ExperimentConfig,
    op: &SequenceOperator,
    scenario: Scenario,
    theta: f64,
) -> Result<(Vec<f64>, Vec<f64>, usize), CliError> {
    let budget = cfg.budget();
    let ens = Ensemble {
        operator: op,
        budget: &budget,
        root_seed: cfg.run.seed,
        first_stream: 0,
        n_sequences: cfg.analysis.spectrum_trials,
        sequences_per_measurement: cfg.schedule.sequences_per_measurement,
        sample_rate: cfg.run.spectrum_sample_rate,
        lo_phase: theta,
        scenario,
        t0_offset: 0.0,
        drift_tag: drift_tag(scenario, theta),
        full_scale: None,
    };
    let p = average_periodogram(&ens.collect()?, cfg.analysis.spectrum_segment)?;
    Ok((p.freq_hz, p.power, p.n_segments))
}

/// Full width at half maximum of `excess`, taken as twice the first
/// frequency past the peak where it falls to half the peak.
pub fn half_max_width(freq: &[f64], excess: &[f64]) -> Option<f64> {
    let (ip, &top) = excess.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(top > 0.0) {
        return None;
    }
    let half = 0.5 * top;
    (ip..excess.len() - 1).find(|&k| excess[k] >= half && excess[k + 1] < half).map(|k| {
        let w = (excess[k] - half) / (excess[k] - excess[k + 1]);
        2.0 * (freq[k] + w * (freq[k + 1] - freq[k]))
    })
}

pub fn simulate_spectrum(cfg: &ExperimentConfig, cal: &Calibration) -> Result<SpectrumData, CliError> {
    let fs = cfg.run.spectrum_sample_rate;
    let n = cfg.run.spectrum_samples(&cfg.analysis);
    let grid = bin_frequencies(n, fs);
    let src = make_opo_spectrum(&cal.source, &grid).map_err(|e| CliError::calibration("source", e))?;
    let eit = apply_filter(&src, &cal.medium).map_err(|e| CliError::calibration("medium", e))?;
    let phases = [cfg.run.lo_phases.0, cfg.run.lo_phases.1];

    let (freq, shot, n_segments) =
        stationary_power(cfg, &SequenceOperator::stationary(n, None)?, Scenario::Vacuum, phases[0])?;
    let mut tables = Vec::new();
    for (spec, scenario) in [(&src, Scenario::SourceOnly), (&eit, Scenario::EitDelay)] {
        let mut levels = Vec::new();
        for &theta in &phases {
            log::info!("{} spectrum at phase {theta:.4}", scenario.name());
            let op = stationary_operator(spec, theta, n, fs)?;
            levels.push(stationary_power(cfg, &op, scenario, theta)?.1);
        }
        // Bin 0 carries only the removed segment mean.
        let rows: Vec<SpectrumRow> = (1..freq.len())
            .map(|k| SpectrumRow {
                freq_hz: freq[k],
                s_min_db: to_db(levels[0][k] / shot[k]),
                s_max_db: to_db(levels[1][k] / shot[k]),
                shot_db: to_db(shot[k]),
            })
            .collect();
        tables.push(rows);
    }
    let transmitted = tables.pop().expect("two tables");
    let source = tables.pop().expect("two tables");
    let f: Vec<f64> = transmitted.iter().map(|r| r.freq_hz).collect();
    let excess: Vec<f64> = transmitted.iter().map(|r| sqmem_core::from_db(r.s_max_db) - 1.0).collect();
    Ok(SpectrumData {
        source,
        transmitted,
        model_fwhm_hz: cal.fwhm_hz,
        estimated_fwhm_hz: half_max_width(&f, &excess),
        n_segments,
    })
}

pub fn spectrum_files(data: &SpectrumData) -> Vec<OutputFile> {
    vec![
        OutputFile::text("spectrum_source.csv", spectrum_csv(&data.source)),
        OutputFile::text("spectrum_transmitted.csv", spectrum_csv(&data.transmitted)),
    ]
}

pub fn spectrum_summary_text(cfg: &ExperimentConfig, cal: &Calibration, data: &SpectrumData) -> String {
    let mean = |rows: &[SpectrumRow], f: fn(&SpectrumRow) -> f64| {
        let band: Vec<f64> = rows
            .iter()
            .filter(|r| r.freq_hz >= cfg.analysis.band_lo_hz && r.freq_hz <= cfg.analysis.band_hi_hz)
            .map(f)
            .collect();
        if band.is_empty() {
            f64::NAN
        } else {
            band.iter().sum::<f64>() / band.len() as f64
        }
    };
    [
        format!("segments = {}", data.n_segments),
        format!("source_band_s_min_db = {:.4}", mean(&data.source, |r| r.s_min_db)),
        format!("source_band_s_max_db = {:.4}", mean(&data.source, |r| r.s_max_db)),
        format!("shot_band_db = {:.4}", mean(&data.source, |r| r.shot_db)),
        format!("transmitted_fwhm_model_hz = {}", opt(data.model_fwhm_hz)),
        format!("transmitted_fwhm_estimated_hz = {}", opt(data.estimated_fwhm_hz)),
        format!("transmitted_fwhm_target_hz = {:e}", cfg.medium.fwhm_target),
        format!("group_delay_s = {}", opt(cal.delay_s)),
    ]
    .join("\n")
        + "\n"
}

pub(crate) fn check_trace(est: &Estimators, trace: &HomodyneTrace) -> Result<(), CliError> {
    est.check(trace)
}
