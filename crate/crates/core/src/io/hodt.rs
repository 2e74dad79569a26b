//! HODT binary trace records, little-endian:
//! magic `HODT`, u32 version, f64 sample rate (Hz), f64 LO phase (rad),
//! u32 scenario code, u64 seed, u64 sample count, then the samples as f64.
//! A file may hold several records back to back. The trace start offset is
//! not stored; decoded traces carry `t0_offset = 0`.

use std::path::Path;

use super::FormatError;
use crate::synth::{HomodyneTrace, Scenario};

pub const HODT_MAGIC: [u8; 4] = *b"HODT";
pub const HODT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 4 + 8 + 8;

pub fn encode_trace(trace: &HomodyneTrace, out: &mut Vec<u8>) {
    out.reserve(HEADER_LEN + 8 * trace.len());
    out.extend_from_slice(&HODT_MAGIC);
    out.extend_from_slice(&HODT_VERSION.to_le_bytes());
    out.extend_from_slice(&trace.sample_rate.to_le_bytes());
    out.extend_from_slice(&trace.lo_phase.to_le_bytes());
    out.extend_from_slice(&trace.scenario.code().to_le_bytes());
    out.extend_from_slice(&trace.seed.to_le_bytes());
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    for v in &trace.samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_traces(traces: &[HomodyneTrace]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in traces {
        encode_trace(t, &mut out);
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(FormatError::Truncated { offset: self.pos, needed: n, available: self.buf.len() - self.pos });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Decodes every record in `bytes`; any malformed or truncated record fails
/// the whole call.
pub fn decode_traces(bytes: &[u8]) -> Result<Vec<HomodyneTrace>, FormatError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let mut out = Vec::new();
    if bytes.is_empty() {
        return Err(FormatError::Truncated { offset: 0, needed: HEADER_LEN, available: 0 });
    }
    while cur.pos < bytes.len() {
        let magic = cur.array::<4>()?;
        if magic != HODT_MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(cur.array()?);
        if version != HODT_VERSION {
            return Err(FormatError::Version(version));
        }
        let sample_rate = f64::from_le_bytes(cur.array()?);
        let lo_phase = f64::from_le_bytes(cur.array()?);
        let code = u32::from_le_bytes(cur.array()?);
        let scenario = Scenario::from_code(code).ok_or(FormatError::Scenario(code))?;
        let seed = u64::from_le_bytes(cur.array()?);
        let n = u64::from_le_bytes(cur.array()?);
        let n = usize::try_from(n).map_err(|_| FormatError::Invalid(format!("sample count {n}")))?;
        if n == 0 {
            return Err(FormatError::Invalid("empty trace".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(FormatError::Invalid(format!("sample rate {sample_rate}")));
        }
        let body = cur.take(n.checked_mul(8).ok_or_else(|| FormatError::Invalid("sample count overflow".into()))?)?;
        let samples: Vec<f64> =
            body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::Invalid("non-finite sample".into()));
        }
        out.push(HomodyneTrace { sample_rate, samples, lo_phase, scenario, seed, t0_offset: 0.0 });
    }
    Ok(out)
}

pub fn read_hodt_file(path: &Path) -> Result<Vec<HomodyneTrace>, FormatError> {
    decode_traces(&std::fs::read(path)?)
}

pub fn write_hodt_file(path: &Path, traces: &[HomodyneTrace]) -> Result<(), FormatError> {
    std::fs::write(path, encode_traces(traces))?;
    Ok(())
}
