//! Matrix marshalling: a JSON array-of-arrays text format and a framed
//! little-endian binary format.
//!
//! RAW frame layout:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `ODM1`                           |
//! | 4      | 4    | rows, `u32` little-endian              |
//! | 8      | 4    | cols, `u32` little-endian              |
//! | 12     | 8·rows·cols | elements, `f64` little-endian, row-major |
//!
//! TEXT is `[[a,b,...],[...]]` with no whitespace, each number printed as
//! the shortest decimal that parses back to the same `f64`.

mod raw;
mod text;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::workloads::Matrix;

pub use raw::{RAW_HEADER_LEN, RAW_MAGIC};
pub use text::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecKind {
    Text,
    Raw,
}

impl CodecKind {
    pub const ALL: [CodecKind; 2] = [CodecKind::Text, CodecKind::Raw];

    pub fn content_type(self) -> &'static str {
        match self {
            CodecKind::Text => "application/json",
            CodecKind::Raw => "application/octet-stream",
        }
    }

    /// Matches on the media type only, ignoring parameters such as `charset`.
    pub fn from_content_type(value: &str) -> Option<CodecKind> {
        let media = value.split(';').next().unwrap_or("").trim();
        CodecKind::ALL.into_iter().find(|k| k.content_type().eq_ignore_ascii_case(media))
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecKind::Text => "TEXT",
            CodecKind::Raw => "RAW",
        }
    }
}

impl fmt::Display for CodecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodecKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown codec {s:?}")))
    }
}

/// An encoded matrix together with the codec that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub kind: CodecKind,
    pub bytes: Vec<u8>,
}

impl Payload {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn decode(&self) -> Result<Matrix> {
        decode(self.kind, &self.bytes)
    }
}

pub fn encode(kind: CodecKind, m: &Matrix) -> Result<Payload> {
    let bytes = match kind {
        CodecKind::Text => text::encode(m)?,
        CodecKind::Raw => raw::encode(m)?,
    };
    Ok(Payload { kind, bytes })
}

pub fn decode(kind: CodecKind, bytes: &[u8]) -> Result<Matrix> {
    match kind {
        CodecKind::Text => text::decode(bytes),
        CodecKind::Raw => raw::decode(bytes),
    }
}

/// Exact RAW payload size for a `rows`x`cols` matrix.
pub fn raw_len(rows: usize, cols: usize) -> usize {
    RAW_HEADER_LEN + 8 * rows * cols
}
