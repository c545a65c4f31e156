//! Binary CSI trace container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! 0   magic "CSIT"
//! 4   u32 version (1)
//! 8   u32 pairs P
//! 12  u32 subcarriers S
//! 16  u64 frame count N
//! 24  f64 nominal rate, samples/s
//! 32  N frames of (f64 timestamp, P·S × (f64 re, f64 im)), pair-major
//! ```

use std::path::Path;

use csisense_core::model::{CsiFrame, CsiTrace, TraceMeta};
use ndarray::Array2;
use num_complex::Complex64;

use crate::{fsutil, CliError};

pub const MAGIC: &[u8; 4] = b"CSIT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TraceFileError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("file is {got} bytes, header implies {expected}")]
    Length { got: usize, expected: usize },
    #[error("trace has no frames")]
    Empty,
    #[error("frames differ in shape")]
    RaggedFrames,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub version: u32,
    pub pairs: usize,
    pub subcarriers: usize,
    pub frames: usize,
    pub nominal_rate: f64,
}

impl Header {
    fn frame_len(&self) -> usize {
        8 * (1 + 2 * self.pairs * self.subcarriers)
    }

    pub fn file_len(&self) -> Option<usize> {
        self.frame_len().checked_mul(self.frames)?.checked_add(HEADER_LEN)
    }
}

pub fn encode(trace: &CsiTrace) -> Result<Vec<u8>, TraceFileError> {
    let (p, s) = (trace.pairs(), trace.subcarriers());
    if trace.is_empty() {
        return Err(TraceFileError::Empty);
    }
    if trace.frames.iter().any(|f| f.gains.dim() != (p, s)) {
        return Err(TraceFileError::RaggedFrames);
    }
    let mut out = Vec::with_capacity(HEADER_LEN + trace.len() * 8 * (1 + 2 * p * s));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(p as u32).to_le_bytes());
    out.extend_from_slice(&(s as u32).to_le_bytes());
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    out.extend_from_slice(&trace.meta.nominal_rate.to_le_bytes());
    for f in &trace.frames {
        out.extend_from_slice(&f.timestamp.to_le_bytes());
        for g in f.gains.iter() {
            out.extend_from_slice(&g.re.to_le_bytes());
            out.extend_from_slice(&g.im.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_header(bytes: &[u8]) -> Result<Header, TraceFileError> {
    if bytes.len() < HEADER_LEN {
        return Err(TraceFileError::Length { got: bytes.len(), expected: HEADER_LEN });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(TraceFileError::BadMagic(magic));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(TraceFileError::UnsupportedVersion(version));
    }
    Ok(Header {
        version,
        pairs: u32_at(bytes, 8) as usize,
        subcarriers: u32_at(bytes, 12) as usize,
        frames: u64_at(bytes, 16) as usize,
        nominal_rate: f64_at(bytes, 24),
    })
}

/// Parses a whole file. Labels are not stored in the file; `meta` carries
/// only the rate and a duration of `frames / rate`.
pub fn decode(bytes: &[u8]) -> Result<CsiTrace, TraceFileError> {
    let h = decode_header(bytes)?;
    let expected = h.file_len().unwrap_or(usize::MAX);
    if bytes.len() != expected {
        return Err(TraceFileError::Length { got: bytes.len(), expected });
    }
    let (p, s) = (h.pairs, h.subcarriers);
    let mut frames = Vec::with_capacity(h.frames);
    let mut at = HEADER_LEN;
    for _ in 0..h.frames {
        let timestamp = f64_at(bytes, at);
        at += 8;
        let gains = Array2::from_shape_fn((p, s), |(i, j)| {
            let k = at + 16 * (i * s + j);
            Complex64::new(f64_at(bytes, k), f64_at(bytes, k + 8))
        });
        at += 16 * p * s;
        frames.push(CsiFrame { timestamp, gains });
    }
    let duration = if h.nominal_rate > 0.0 { h.frames as f64 / h.nominal_rate } else { 0.0 };
    Ok(CsiTrace { frames, meta: TraceMeta { nominal_rate: h.nominal_rate, duration, ..TraceMeta::default() } })
}

pub fn write(path: &Path, trace: &CsiTrace) -> Result<(), CliError> {
    let bytes = encode(trace).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    fsutil::write_atomic(path, &bytes)
}

pub fn read(path: &Path) -> Result<CsiTrace, CliError> {
    decode(&fsutil::read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
