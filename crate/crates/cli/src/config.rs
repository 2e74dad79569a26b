//! Flat `section.key = value` experiment configuration.
//!
//! Everything after `#` on a line is a comment. Unknown and repeated keys are
//! errors; missing keys take their defaults. [`ExperimentConfig::to_text`]
//! writes every key with its default and meaning in a comment, and parsing
//! that text gives back the same config.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use sqmem_core::analysis::{Method1Config, ModeFunction};
use sqmem_core::medium::{FitMode, RB87_D1_LINEWIDTH};
use sqmem_core::storage::{StorageChannel, HALVING_DECAY_TIME};
use sqmem_core::synth::{ImperfectionBudget, PulseSchedule, SpikeLine};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("line {line}, column {column}: unknown key `{key}`")]
    UnknownKey { line: usize, column: usize, key: String },
    #[error("line {line}, column {column}: `{key}` set twice (first on line {first})")]
    Duplicate { line: usize, column: usize, key: String, first: usize },
    #[error("line {line}, column {column}: `{key}`: {msg}")]
    Value { line: usize, column: usize, key: String, msg: String },
    #[error("`{key}`: {msg}")]
    Constraint { key: &'static str, msg: String },
}

/// Which estimators the timeline scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Methods {
    Both,
    WindowOnly,
    ModeOnly,
}

impl Methods {
    pub fn window(self) -> bool {
        self != Methods::ModeOnly
    }

    pub fn mode(self) -> bool {
        self != Methods::WindowOnly
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub max_db: f64,
    pub min_db: f64,
    pub pump_param: Option<f64>,
    pub escape_eff: Option<f64>,
    pub cavity_hwhm: f64,
    pub grid_max_hz: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumConfig {
    pub optical_depth: f64,
    pub linewidth: f64,
    pub control_rabi: Option<f64>,
    pub ground_decoherence: Option<f64>,
    pub delay_target: f64,
    pub fwhm_target: f64,
    pub fit: FitMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub eta0: Option<f64>,
    pub flux_ratio_target: f64,
    pub decay_time: f64,
    pub coherence_time: f64,
    pub retrieval_tau: f64,
    pub t_off: f64,
    pub t_on: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub pulse_len: f64,
    pub tail_leak: f64,
    pub sequence_len: f64,
    pub trace_start: f64,
    pub sequences_per_measurement: u64,
    pub n_measurements: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionConfig {
    pub lo_drift_db_sigma: f64,
    pub cmrr_db: f64,
    pub lo_classical_excess_db: f64,
    pub lo_band_lo_hz: f64,
    pub lo_band_hi_hz: f64,
    pub adc_bits: Option<u32>,
    pub electronic_floor_db: f64,
    pub spike_lines: Vec<SpikeLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub methods: Methods,
    pub window: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub mode_tau: f64,
    pub mode_window: f64,
    pub mode_step: f64,
    pub excluded_bins: Vec<usize>,
    pub spectrum_segment: usize,
    pub spectrum_trials: usize,
    pub spectrum_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub lo_phases: (f64, f64),
    pub sample_rate: f64,
    pub spectrum_sample_rate: f64,
    pub sequences: Option<usize>,
    pub write_traces: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub medium: MediumConfig,
    pub channel: ChannelConfig,
    pub schedule: ScheduleConfig,
    pub imperfections: ImperfectionConfig,
    pub analysis: AnalysisConfig,
    pub run: RunConfig,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            max_db: 6.0,
            min_db: -2.0,
            pump_param: None,
            escape_eff: None,
            cavity_hwhm: 2.0 * PI * 1e7,
            grid_max_hz: 10e6,
            grid_points: 2048,
        }
    }
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            optical_depth: 5.0,
            linewidth: RB87_D1_LINEWIDTH,
            control_rabi: None,
            ground_decoherence: None,
            delay_target: 135e-9,
            fwhm_target: 2.7e6,
            fit: FitMode::DelayPriority,
        }
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            eta0: None,
            flux_ratio_target: 0.2,
            decay_time: HALVING_DECAY_TIME,
            coherence_time: 10e-6,
            retrieval_tau: 250e-9,
            t_off: 0.0,
            t_on: 3e-6,
        }
    }
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            pulse_len: 930e-9,
            tail_leak: 0.05,
            sequence_len: 11e-6,
            trace_start: -1.48e-6,
            sequences_per_measurement: 90,
            n_measurements: 1000,
        }
    }
}

impl Default for ImperfectionConfig {
    fn default() -> Self {
        let b = ImperfectionBudget::default();
        Self {
            lo_drift_db_sigma: b.lo_drift_db_sigma,
            cmrr_db: b.cmrr_db,
            lo_classical_excess_db: b.lo_classical_excess_db,
            lo_band_lo_hz: b.lo_band_hz.0,
            lo_band_hi_hz: b.lo_band_hz.1,
            adc_bits: b.adc_bits,
            electronic_floor_db: b.electronic_floor_db,
            spike_lines: b.spike_lines,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            methods: Methods::Both,
            window: 640e-9,
            band_lo_hz: 1e6,
            band_hi_hz: 2e6,
            mode_tau: 250e-9,
            mode_window: 750e-9,
            mode_step: 40e-9,
            excluded_bins: Vec::new(),
            spectrum_segment: 256,
            spectrum_trials: 1000,
            spectrum_duration: 20.48e-6,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: "out".into(),
            lo_phases: (0.0, FRAC_PI_2),
            sample_rate: 2e8,
            spectrum_sample_rate: 5e7,
            sequences: None,
            write_traces: false,
        }
    }
}

/// Text form of one config value.
pub trait Value: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

fn render_f64(v: f64) -> String {
    // Both forms are the shortest text that parses back to the same double.
    if v != 0.0 && v.is_finite() && (v.abs() >= 1e6 || v.abs() < 1e-3) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl Value for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if v.is_nan() {
            return Err("NaN is not allowed".into());
        }
        Ok(v)
    }

    fn render(&self) -> String {
        render_f64(*self)
    }
}

macro_rules! integer_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse_value(s: &str) -> Result<Self, String> {
                s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
            }

            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

integer_value!(u64, usize);

impl Value for bool {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("`{s}` is not true or false")),
        }
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for String {
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }

    fn render(&self) -> String {
        self.clone()
    }
}

/// `auto` leaves the quantity to calibration.
impl Value for Option<f64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(None)
        } else {
            f64::parse_value(s).map(Some)
        }
    }

    fn render(&self) -> String {
        self.map_or("auto".into(), render_f64)
    }
}

impl Value for Option<usize> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(None)
        } else {
            usize::parse_value(s).map(Some)
        }
    }

    fn render(&self) -> String {
        self.map_or("auto".into(), |v| v.to_string())
    }
}

/// ADC resolution; `off` disables quantization.
impl Value for Option<u32> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "off" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("`{s}` is not a bit count or `off`"))
        }
    }

    fn render(&self) -> String {
        self.map_or("off".into(), |v| v.to_string())
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s == "none" {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| item(p.trim())).collect()
}

fn render_list<T>(v: &[T], item: impl Fn(&T) -> String) -> String {
    if v.is_empty() {
        return "none".into();
    }
    v.iter().map(item).collect::<Vec<_>>().join(", ")
}

/// `freq_hz:power_db` pairs separated by commas, or `none`.
impl Value for Vec<SpikeLine> {
    fn parse_value(s: &str) -> Result<Self, String> {
        parse_list(s, |p| {
            let (f, db) = p.split_once(':').ok_or_else(|| format!("`{p}` is not freq_hz:power_db"))?;
            Ok(SpikeLine { freq_hz: f64::parse_value(f.trim())?, power_db: f64::parse_value(db.trim())? })
        })
    }

    fn render(&self) -> String {
        render_list(self, |l| format!("{}:{}", render_f64(l.freq_hz), render_f64(l.power_db)))
    }
}

impl Value for Vec<usize> {
    fn parse_value(s: &str) -> Result<Self, String> {
        parse_list(s, usize::parse_value)
    }

    fn render(&self) -> String {
        render_list(self, |v| v.to_string())
    }
}

impl Value for (f64, f64) {
    fn parse_value(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("`{s}` is not a pair `a, b`"))?;
        Ok((f64::parse_value(a.trim())?, f64::parse_value(b.trim())?))
    }

    fn render(&self) -> String {
        format!("{}, {}", render_f64(self.0), render_f64(self.1))
    }
}

impl Value for FitMode {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "strict" => Ok(FitMode::Strict),
            "delay_priority" => Ok(FitMode::DelayPriority),
            _ => Err(format!("`{s}` is not strict or delay_priority")),
        }
    }

    fn render(&self) -> String {
        match self {
            FitMode::Strict => "strict",
            FitMode::DelayPriority => "delay_priority",
        }
        .into()
    }
}

impl Value for Methods {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "both" => Ok(Methods::Both),
            "window" => Ok(Methods::WindowOnly),
            "mode" => Ok(Methods::ModeOnly),
            _ => Err(format!("`{s}` is not both, window or mode")),
        }
    }

    fn render(&self) -> String {
        match self {
            Methods::Both => "both",
            Methods::WindowOnly => "window",
            Methods::ModeOnly => "mode",
        }
        .into()
    }
}

macro_rules! key_table {
    ($($sec:ident . $field:ident => $doc:literal,)*) => {
        /// Every key in file order with its description.
        pub const KEYS: &[(&str, &str)] = &[$((concat!(stringify!($sec), ".", stringify!($field)), $doc)),*];

        fn set_key(c: &mut ExperimentConfig, key: &str, v: &str) -> Option<Result<(), String>> {
            match key {
                $(concat!(stringify!($sec), ".", stringify!($field)) => Some(Value::parse_value(v).map(|x| c.$sec.$field = x)),)*
                _ => None,
            }
        }

        fn get_key(c: &ExperimentConfig, key: &str) -> Option<String> {
            match key {
                $(concat!(stringify!($sec), ".", stringify!($field)) => Some(c.$sec.$field.render()),)*
                _ => None,
            }
        }
    };
}

key_table! {
    source.max_db => "anti-squeezed level at zero sideband frequency (dB over shot noise)",
    source.min_db => "squeezed level at zero sideband frequency (dB)",
    source.pump_param => "OPO pump parameter x in [0, 1); auto solves it from the two levels",
    source.escape_eff => "OPO escape and detection efficiency; auto solves it from the two levels",
    source.cavity_hwhm => "cavity half width, compared directly with the sideband frequency in Hz",
    source.grid_max_hz => "upper end of the design frequency grid (Hz)",
    source.grid_points => "points on the design frequency grid",
    medium.optical_depth => "on-resonance optical depth without control field",
    medium.linewidth => "excited-state linewidth (rad/s), Rb87 D1 natural linewidth",
    medium.control_rabi => "control Rabi frequency (rad/s); auto fits it to the delay target",
    medium.ground_decoherence => "ground-state decoherence rate (rad/s); auto fits it to the window target",
    medium.delay_target => "group delay the medium is fitted to (s)",
    medium.fwhm_target => "transparency window FWHM the medium is fitted to (Hz)",
    medium.fit => "strict fails when the window is out of reach; delay_priority keeps the delay and reports the window residual",
    channel.eta0 => "retrieval efficiency at zero storage time; auto fits it to the flux ratio target",
    channel.flux_ratio_target => "peak retrieved flux over peak delayed-pulse flux",
    channel.decay_time => "memory decay time (s); 2 us / ln 2 halves the retrieved excess every 2 us",
    channel.coherence_time => "ground coherence time estimate (s); reported only, the decay time drives the model",
    channel.retrieval_tau => "decay time of the retrieved temporal mode (s)",
    channel.t_off => "control switch-off time (s)",
    channel.t_on => "control switch-on time (s)",
    schedule.pulse_len => "squeezed pulse length before switch-off (s)",
    schedule.tail_leak => "power fraction leaking outside the pulse",
    schedule.sequence_len => "record length of one sequence (s)",
    schedule.trace_start => "record start relative to switch-off (s)",
    schedule.sequences_per_measurement => "sequences sharing one LO drift draw",
    schedule.n_measurements => "measurements per run; --scale paper uses 10000",
    imperfections.lo_drift_db_sigma => "LO power drift per measurement (dB, one sigma)",
    imperfections.cmrr_db => "balanced-detector common-mode rejection (dB)",
    imperfections.lo_classical_excess_db => "LO classical noise over shot noise in the LO band (dB)",
    imperfections.lo_band_lo_hz => "lower edge of the LO classical noise band (Hz)",
    imperfections.lo_band_hi_hz => "upper edge of the LO classical noise band (Hz)",
    imperfections.adc_bits => "ADC resolution over +-5 sigma full scale; off disables quantization",
    imperfections.electronic_floor_db => "white electronic noise relative to shot noise (dB); -inf disables it",
    imperfections.spike_lines => "spike tones below 700 kHz as freq_hz:power_db, or none",
    analysis.methods => "timeline estimators: both, window (Method I) or mode (Method II)",
    analysis.window => "Method I window length (s)",
    analysis.band_lo_hz => "Method I band lower edge (Hz)",
    analysis.band_hi_hz => "Method I band upper edge (Hz)",
    analysis.mode_tau => "Method II mode decay time (s)",
    analysis.mode_window => "Method II integration length (s)",
    analysis.mode_step => "spacing of Method II mode start times on the timeline (s)",
    analysis.excluded_bins => "segment DFT bins removed before Method II projection, or none",
    analysis.spectrum_segment => "periodogram segment length (samples)",
    analysis.spectrum_trials => "stationary traces per spectrum",
    analysis.spectrum_duration => "length of one stationary trace (s)",
    run.seed => "root seed of every random stream",
    run.out_dir => "output directory",
    run.lo_phases => "orthogonal LO phase pair (rad); the first fills s_min columns",
    run.sample_rate => "sample rate of pulse sequences (samples/s)",
    run.spectrum_sample_rate => "sample rate of stationary spectra (samples/s)",
    run.sequences => "sequences per run; auto uses n_measurements x sequences_per_measurement",
    run.write_traces => "also write every synthesized trace as HODT",
}

fn section_title(section: &str) -> &'static str {
    match section {
        "source" => "Squeezed-vacuum source",
        "medium" => "EIT medium",
        "channel" => "Storage channel",
        "schedule" => "Pulse schedule",
        "imperfections" => "Detector and LO imperfections",
        "analysis" => "Estimators",
        _ => "Run",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<(&str, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let col = |byte: usize| raw[..byte].chars().count() + 1;
            let start = body.len() - body.trim_start().len();
            let Some(eq) = body.find('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    column: col(start),
                    msg: "expected `section.key = value`".into(),
                });
            };
            let key = body[..eq].trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, column: col(start), msg: "missing key before `=`".into() });
            }
            if let Some(bad) =
                key.find(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.'))
            {
                return Err(ConfigError::Syntax {
                    line,
                    column: col(start + bad),
                    msg: format!("invalid character in key `{key}`"),
                });
            }
            if key.matches('.').count() != 1 {
                return Err(ConfigError::Syntax {
                    line,
                    column: col(start),
                    msg: format!("key `{key}` is not `section.key`"),
                });
            }
            let after = &body[eq + 1..];
            let value = after.trim();
            let vcol = col(eq + 1 + (after.len() - after.trim_start().len()));
            if value.is_empty() {
                return Err(ConfigError::Syntax { line, column: vcol, msg: format!("missing value for `{key}`") });
            }
            let Some((name, _)) = KEYS.iter().find(|(k, _)| *k == key) else {
                return Err(ConfigError::UnknownKey { line, column: col(start), key: key.into() });
            };
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == name) {
                return Err(ConfigError::Duplicate { line, column: col(start), key: key.into(), first: *first });
            }
            seen.push((name, line));
            if let Some(Err(msg)) = set_key(&mut cfg, key, value) {
                return Err(ConfigError::Value { line, column: vcol, key: key.into(), msg });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its description and default; parses back to `self`.
    pub fn to_text(&self) -> String {
        let defaults = Self::default();
        let mut out = String::new();
        let mut section = "";
        for (key, doc) in KEYS {
            let sec = key.split('.').next().unwrap_or("");
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("# {}\n", section_title(sec)));
                section = sec;
            }
            let default = get_key(&defaults, key).unwrap_or_default();
            out.push_str(&format!("# {doc}; default {default}\n"));
            out.push_str(&format!("{key} = {}\n", get_key(self, key).unwrap_or_default()));
        }
        out
    }

    /// Value of one key in file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        get_key(self, key)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &'static str, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Constraint { key, msg: msg() })
            }
        }
        fn finite(v: f64, key: &'static str) -> Result<(), ConfigError> {
            check(v.is_finite(), key, || format!("{v} is not finite"))
        }
        fn positive(v: f64, key: &'static str) -> Result<(), ConfigError> {
            check(v.is_finite() && v > 0.0, key, || format!("must be > 0, got {v}"))
        }
        fn paired(a: bool, b: bool, key: &'static str, other: &str) -> Result<(), ConfigError> {
            check(a == b, key, || format!("set together with `{other}` or leave both auto"))
        }

        let s = &self.source;
        check(s.max_db.is_finite() && s.max_db > 0.0, "source.max_db", || format!("must be > 0 dB, got {}", s.max_db))?;
        check(s.min_db.is_finite() && s.min_db < 0.0, "source.min_db", || format!("must be < 0 dB, got {}", s.min_db))?;
        paired(s.pump_param.is_some(), s.escape_eff.is_some(), "source.escape_eff", "source.pump_param")?;
        if let Some(x) = s.pump_param {
            check((0.0..1.0).contains(&x), "source.pump_param", || format!("must lie in [0, 1), got {x}"))?;
        }
        if let Some(e) = s.escape_eff {
            check(e > 0.0 && e <= 1.0, "source.escape_eff", || format!("must lie in (0, 1], got {e}"))?;
        }
        positive(s.cavity_hwhm, "source.cavity_hwhm")?;
        positive(s.grid_max_hz, "source.grid_max_hz")?;
        check(s.grid_points >= 2, "source.grid_points", || "must be at least 2".into())?;

        let m = &self.medium;
        positive(m.optical_depth, "medium.optical_depth")?;
        positive(m.linewidth, "medium.linewidth")?;
        paired(
            m.control_rabi.is_some(),
            m.ground_decoherence.is_some(),
            "medium.ground_decoherence",
            "medium.control_rabi",
        )?;
        if let Some(v) = m.control_rabi {
            check(v.is_finite() && v >= 0.0, "medium.control_rabi", || format!("must be >= 0, got {v}"))?;
        }
        if let Some(v) = m.ground_decoherence {
            check(v.is_finite() && v >= 0.0, "medium.ground_decoherence", || format!("must be >= 0, got {v}"))?;
        }
        finite(m.delay_target, "medium.delay_target")?;
        finite(m.fwhm_target, "medium.fwhm_target")?;

        let c = &self.channel;
        if let Some(e) = c.eta0 {
            check((0.0..=1.0).contains(&e), "channel.eta0", || format!("must lie in [0, 1], got {e}"))?;
        }
        check(c.flux_ratio_target > 0.0 && c.flux_ratio_target <= 1.0, "channel.flux_ratio_target", || {
            format!("must lie in (0, 1], got {}", c.flux_ratio_target)
        })?;
        positive(c.decay_time, "channel.decay_time")?;
        positive(c.coherence_time, "channel.coherence_time")?;
        positive(c.retrieval_tau, "channel.retrieval_tau")?;
        finite(c.t_off, "channel.t_off")?;
        finite(c.t_on, "channel.t_on")?;
        check(c.t_on > c.t_off, "channel.t_on", || {
            format!("must be > channel.t_off ({} s), got {} s", c.t_off, c.t_on)
        })?;

        let p = &self.schedule;
        positive(p.sequence_len, "schedule.sequence_len")?;
        check(p.pulse_len > 0.0 && p.pulse_len < p.sequence_len, "schedule.pulse_len", || {
            format!("must lie in (0, sequence_len), got {}", p.pulse_len)
        })?;
        check((0.0..1.0).contains(&p.tail_leak), "schedule.tail_leak", || {
            format!("must lie in [0, 1), got {}", p.tail_leak)
        })?;
        finite(p.trace_start, "schedule.trace_start")?;
        check(p.trace_start <= c.t_off - p.pulse_len, "schedule.trace_start", || {
            format!("record must start before the pulse at {} s", c.t_off - p.pulse_len)
        })?;
        check(c.t_on < p.trace_start + p.sequence_len, "schedule.sequence_len", || {
            "record must extend past channel.t_on".into()
        })?;
        check(p.sequences_per_measurement >= 1, "schedule.sequences_per_measurement", || "must be at least 1".into())?;
        check(p.n_measurements >= 1, "schedule.n_measurements", || "must be at least 1".into())?;

        let im = &self.imperfections;
        check(
            im.lo_drift_db_sigma.is_finite() && im.lo_drift_db_sigma >= 0.0,
            "imperfections.lo_drift_db_sigma",
            || format!("must be >= 0, got {}", im.lo_drift_db_sigma),
        )?;
        check(im.cmrr_db < f64::INFINITY, "imperfections.cmrr_db", || "must be finite or -inf".into())?;
        finite(im.lo_classical_excess_db, "imperfections.lo_classical_excess_db")?;
        check(im.electronic_floor_db < f64::INFINITY, "imperfections.electronic_floor_db", || {
            "must be finite or -inf".into()
        })?;
        check(im.lo_band_lo_hz >= 0.0 && im.lo_band_lo_hz < im.lo_band_hi_hz, "imperfections.lo_band_hi_hz", || {
            "LO band must satisfy 0 <= lo < hi".into()
        })?;
        finite(im.lo_band_hi_hz, "imperfections.lo_band_hi_hz")?;
        if let Some(b) = im.adc_bits {
            check((1..=32).contains(&b), "imperfections.adc_bits", || format!("must lie in 1..=32, got {b}"))?;
        }
        self.budget()
            .validate()
            .map_err(|e| ConfigError::Constraint { key: "imperfections.spike_lines", msg: e.to_string() })?;

        let a = &self.analysis;
        positive(a.window, "analysis.window")?;
        check(a.band_lo_hz >= 0.0 && a.band_lo_hz < a.band_hi_hz, "analysis.band_hi_hz", || {
            "band must satisfy 0 <= lo < hi".into()
        })?;
        finite(a.band_hi_hz, "analysis.band_hi_hz")?;
        positive(a.mode_tau, "analysis.mode_tau")?;
        positive(a.mode_window, "analysis.mode_window")?;
        positive(a.mode_step, "analysis.mode_step")?;
        check(a.spectrum_segment >= 2, "analysis.spectrum_segment", || "must be at least 2".into())?;
        check(a.spectrum_trials >= 2, "analysis.spectrum_trials", || "must be at least 2".into())?;
        positive(a.spectrum_duration, "analysis.spectrum_duration")?;

        let r = &self.run;
        let dir = &r.out_dir;
        check(!dir.is_empty() && dir.trim() == dir && !dir.contains(['#', '\n', '\r']), "run.out_dir", || {
            "must be non-empty, without `#`, line breaks or surrounding spaces".into()
        })?;
        finite(r.lo_phases.0, "run.lo_phases")?;
        finite(r.lo_phases.1, "run.lo_phases")?;
        check(((r.lo_phases.1 - r.lo_phases.0).rem_euclid(PI) - FRAC_PI_2).abs() < 1e-9, "run.lo_phases", || {
            format!("phases {} and {} are not orthogonal", r.lo_phases.0, r.lo_phases.1)
        })?;
        positive(r.sample_rate, "run.sample_rate")?;
        positive(r.spectrum_sample_rate, "run.spectrum_sample_rate")?;
        check(
            (r.spectrum_duration_samples(a.spectrum_duration)) >= a.spectrum_segment,
            "analysis.spectrum_duration",
            || "stationary trace shorter than one segment".into(),
        )?;
        if let Some(n) = r.sequences {
            check(n >= 2, "run.sequences", || "must be at least 2".into())?;
        }
        Ok(())
    }

    pub fn budget(&self) -> ImperfectionBudget {
        let im = &self.imperfections;
        ImperfectionBudget {
            lo_drift_db_sigma: im.lo_drift_db_sigma,
            cmrr_db: im.cmrr_db,
            lo_classical_excess_db: im.lo_classical_excess_db,
            lo_band_hz: (im.lo_band_lo_hz, im.lo_band_hi_hz),
            adc_bits: im.adc_bits,
            electronic_floor_db: im.electronic_floor_db,
            spike_lines: im.spike_lines.clone(),
        }
    }

    pub fn schedule(&self) -> PulseSchedule {
        let p = &self.schedule;
        PulseSchedule {
            pulse_len: p.pulse_len,
            tail_leak: p.tail_leak,
            t_off: self.channel.t_off,
            t_on: self.channel.t_on,
            sequence_len: p.sequence_len,
            sequences_per_measurement: p.sequences_per_measurement,
            n_measurements: p.n_measurements,
            trace_start: p.trace_start,
        }
    }

    /// Channel with the configured efficiency, or zero when it is left to
    /// calibration.
    pub fn channel_template(&self) -> StorageChannel {
        let c = &self.channel;
        StorageChannel {
            eta0: c.eta0.unwrap_or(0.0),
            decay_time: c.decay_time,
            retrieval_tau: c.retrieval_tau,
            t_off: c.t_off,
            t_on: c.t_on,
        }
    }

    pub fn method1(&self) -> Method1Config {
        Method1Config { window: self.analysis.window, band_hz: (self.analysis.band_lo_hz, self.analysis.band_hi_hz) }
    }

    pub fn mode(&self, t0: f64) -> ModeFunction {
        ModeFunction {
            excluded_bins: self.analysis.excluded_bins.clone(),
            ..ModeFunction::new(self.analysis.mode_tau, t0, self.analysis.mode_window)
        }
    }

    pub fn design_grid(&self) -> Vec<f64> {
        let n = self.source.grid_points;
        (0..n).map(|k| self.source.grid_max_hz * k as f64 / (n - 1) as f64).collect()
    }

    pub fn n_sequences(&self) -> usize {
        self.run.sequences.unwrap_or((self.schedule.n_measurements * self.schedule.sequences_per_measurement) as usize)
    }
}

impl RunConfig {
    fn spectrum_duration_samples(&self, duration: f64) -> usize {
        (duration * self.spectrum_sample_rate).round() as usize
    }

    pub fn spectrum_samples(&self, analysis: &AnalysisConfig) -> usize {
        self.spectrum_duration_samples(analysis.spectrum_duration)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_unique() {
        for (i, (k, _)) in KEYS.iter().enumerate() {
            assert!(KEYS[i + 1..].iter().all(|(o, _)| o != k), "{k}");
            assert!(get_key(&ExperimentConfig::default(), k).is_some());
        }
    }

    #[test]
    fn f64_text_is_exact() {
        for v in [0.0, -0.0, 1.0, 0.05, 135e-9, 2.7e6, HALVING_DECAY_TIME, f64::NEG_INFINITY, 1e-300, -1.48e-6] {
            let back = f64::parse_value(&render_f64(v)).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
    }
}
