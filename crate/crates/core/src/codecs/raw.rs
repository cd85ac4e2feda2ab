use crate::error::{Error, Result};
use crate::workloads::Matrix;

pub const RAW_MAGIC: &[u8; 4] = b"ODM1";
pub const RAW_HEADER_LEN: usize = 12;

pub(super) fn encode(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::invalid("rows exceed u32"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::invalid("cols exceed u32"))?;
    let mut out = Vec::with_capacity(super::raw_len(m.rows(), m.cols()));
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for x in m.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub(super) fn decode(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(Error::malformed(format!("RAW payload of {} bytes has no header", bytes.len())));
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::malformed(format!("bad RAW magic {:?}", &bytes[..4])));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[RAW_HEADER_LEN..];
    let expected =
        rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| Error::malformed("RAW shape overflows"))?;
    if body.len() != expected {
        return Err(Error::malformed(format!("RAW {rows}x{cols} body needs {expected} bytes, got {}", body.len())));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Matrix::new(rows, cols, data).map_err(|e| Error::malformed(e.to_string()))
}
