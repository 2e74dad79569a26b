//! CSV tables. Numbers are written in the shortest form that parses back
//! to the same double.

use super::FormatError;

/// One row of a noise timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRow {
    pub window_index: usize,
    pub t_center_s: f64,
    pub s_min_db: f64,
    pub s_max_db: f64,
    pub flux: f64,
    pub stat_err_db: f64,
    pub lo_err_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub freq_hz: f64,
    pub s_min_db: f64,
    pub s_max_db: f64,
    pub shot_db: f64,
}

const TIMELINE_HEADER: &str = "window_index,t_center_s,s_min_db,s_max_db,flux,stat_err_db,lo_err_db";
const SPECTRUM_HEADER: &str = "freq_hz,s_min_db,s_max_db,shot_db";
const TRACE_HEADER: &str = "time_s,value";

pub fn timeline_csv(rows: &[TimelineRow]) -> String {
    let mut s = format!("{TIMELINE_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.window_index, r.t_center_s, r.s_min_db, r.s_max_db, r.flux, r.stat_err_db, r.lo_err_db
        ));
    }
    s
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut s = format!("{SPECTRUM_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.freq_hz, r.s_min_db, r.s_max_db, r.shot_db));
    }
    s
}

/// `time_s,value` export of a trace, time relative to the control switch-off.
pub fn trace_csv(trace: &crate::synth::HomodyneTrace) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for (i, v) in trace.samples.iter().enumerate() {
        s.push_str(&format!("{},{}\n", trace.time(i), v));
    }
    s
}

fn rows(text: &str, header: &str, width: usize) -> Result<Vec<Vec<f64>>, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((i, h)) => {
            return Err(FormatError::Csv { line: i + 1, msg: format!("expected header `{header}`, got `{h}`") })
        }
        None => return Err(FormatError::Csv { line: 1, msg: "empty table".into() }),
    }
    lines
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols.len() != width {
                return Err(FormatError::Csv { line: i + 1, msg: format!("{} columns, expected {width}", cols.len()) });
            }
            cols.iter()
                .map(|c| c.parse::<f64>().map_err(|e| FormatError::Csv { line: i + 1, msg: format!("`{c}`: {e}") }))
                .collect()
        })
        .collect()
}

pub fn parse_timeline_csv(text: &str) -> Result<Vec<TimelineRow>, FormatError> {
    rows(text, TIMELINE_HEADER, 7)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v[0] < 0.0 || v[0].fract() != 0.0 {
                return Err(FormatError::Csv { line: i + 2, msg: format!("window index {}", v[0]) });
            }
            Ok(TimelineRow {
                window_index: v[0] as usize,
                t_center_s: v[1],
                s_min_db: v[2],
                s_max_db: v[3],
                flux: v[4],
                stat_err_db: v[5],
                lo_err_db: v[6],
            })
        })
        .collect()
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<SpectrumRow>, FormatError> {
    Ok(rows(text, SPECTRUM_HEADER, 4)?
        .into_iter()
        .map(|v| SpectrumRow { freq_hz: v[0], s_min_db: v[1], s_max_db: v[2], shot_db: v[3] })
        .collect())
}

/// Returns `(time_s, value)` columns.
pub fn parse_trace_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), FormatError> {
    Ok(rows(text, TRACE_HEADER, 2)?.into_iter().map(|v| (v[0], v[1])).unzip())
}
