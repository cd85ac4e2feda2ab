use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use super::http::{self, HttpError};
use super::{invoke_path, HEADER_SRV_DECODE, HEADER_SRV_ENCODE, HEADER_SRV_EXEC};
use crate::codecs::{self, CodecKind};
use crate::error::{Error, Result};
use crate::metrics::StageTimings;
use crate::workloads::{Matrix, OpKind};

const IO_TIMEOUT: Duration = Duration::from_secs(300);

/// Result of one remote call.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub result: Matrix,
    pub timings: StageTimings,
    /// Encoded request body size in bytes.
    pub request_bytes: usize,
    /// Encoded response body size in bytes.
    pub response_bytes: usize,
}

fn unreachable(e: impl std::fmt::Display) -> Error {
    Error::Unreachable(e.to_string())
}

fn header_secs(headers: &http::Headers, name: &str) -> Result<f64> {
    let v = headers.get(name).ok_or_else(|| Error::malformed(format!("response lacks {name}")))?;
    let us: u64 = v.trim().parse().map_err(|_| Error::malformed(format!("{name} is not an integer: {v:?}")))?;
    Ok(us as f64 * 1e-6)
}

/// Encodes `m`, posts it to `endpoint` for `op`, and decodes the result.
///
/// `t_request` spans from the first request byte written to the last
/// response byte read; connection setup is excluded.
pub fn invoke_remote(endpoint: impl ToSocketAddrs, op: OpKind, codec: CodecKind, m: &Matrix) -> Result<Invocation> {
    let addr = endpoint
        .to_socket_addrs()
        .map_err(unreachable)?
        .next()
        .ok_or_else(|| unreachable("endpoint resolved to no address"))?;

    let t0 = Instant::now();
    let payload = codecs::encode(codec, m)?;
    let t_encode_client = t0.elapsed().as_secs_f64();

    let stream = TcpStream::connect(addr).map_err(unreachable)?;
    stream.set_nodelay(true).map_err(unreachable)?;
    stream.set_read_timeout(Some(IO_TIMEOUT)).map_err(unreachable)?;
    stream.set_write_timeout(Some(IO_TIMEOUT)).map_err(unreachable)?;
    let mut writer = stream.try_clone().map_err(unreachable)?;
    let mut reader = BufReader::with_capacity(64 * 1024, stream);

    let t1 = Instant::now();
    http::write_request(&mut writer, &invoke_path(op), &addr.to_string(), codec.content_type(), &payload.bytes)
        .map_err(unreachable)?;
    let response = http::read_response(&mut reader).map_err(|e| match e {
        HttpError::Io(e) => unreachable(e),
        other => Error::malformed(other.to_string()),
    })?;
    let t_request = t1.elapsed().as_secs_f64();

    if response.status != 200 {
        return Err(Error::Remote {
            status: response.status,
            message: String::from_utf8_lossy(&response.body).into_owned(),
        });
    }
    let t_srv_decode = header_secs(&response.headers, HEADER_SRV_DECODE)?;
    let t_srv_exec = header_secs(&response.headers, HEADER_SRV_EXEC)?;
    let t_srv_encode = header_secs(&response.headers, HEADER_SRV_ENCODE)?;
    if let Some(ct) = response.headers.get("content-type") {
        if CodecKind::from_content_type(ct) != Some(codec) {
            return Err(Error::malformed(format!("response content type {ct:?} does not match {codec}")));
        }
    }

    let t2 = Instant::now();
    let result = codecs::decode(codec, &response.body)?;
    let t_decode_client = t2.elapsed().as_secs_f64();

    Ok(Invocation {
        result,
        timings: StageTimings { t_encode_client, t_request, t_decode_client, t_srv_decode, t_srv_exec, t_srv_encode },
        request_bytes: payload.len(),
        response_bytes: response.body.len(),
    })
}
