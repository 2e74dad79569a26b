//! Trace container and tabular outputs.

mod hodt;
mod tables;

use thiserror::Error;

pub use hodt::{decode_traces, encode_trace, encode_traces, read_hodt_file, write_hodt_file, HODT_MAGIC, HODT_VERSION};
pub use tables::{
    parse_spectrum_csv, parse_timeline_csv, parse_trace_csv, spectrum_csv, timeline_csv, trace_csv, SpectrumRow,
    TimelineRow,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected HODT")]
    BadMagic([u8; 4]),
    #[error("unsupported HODT version {0}")]
    Version(u32),
    #[error("truncated record: need {needed} bytes at offset {offset}, have {available}")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("unknown scenario code {0}")]
    Scenario(u32),
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
