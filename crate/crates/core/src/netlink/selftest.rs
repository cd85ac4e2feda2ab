use std::io::{BufReader, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::offload::http;
use crate::offload::SINK_PATH;

const RTT_PROBES: usize = 5;
const WRITE_BLOCK: usize = 64 * 1024;

/// Measured behaviour of a shaped path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestReport {
    pub target_bps: f64,
    pub throughput_bps: f64,
    /// Smallest request/response round trip seen with an empty body.
    pub rtt_floor_s: f64,
    pub bytes: u64,
    pub elapsed_s: f64,
}

impl SelftestReport {
    /// Achieved throughput relative to the target, minus one.
    pub fn relative_error(&self) -> f64 {
        self.throughput_bps / self.target_bps - 1.0
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.relative_error().abs() <= tolerance
    }

    /// Pass criterion: throughput within 10% of the configured rate.
    pub fn passed(&self) -> bool {
        self.within(0.10)
    }
}

fn unreachable(e: impl std::fmt::Display) -> Error {
    Error::Unreachable(e.to_string())
}

/// Posts `len` zero bytes to the sink behind `addr` and returns the elapsed
/// time from the first byte written to the last response byte read.
fn sink_exchange(addr: SocketAddr, len: u64) -> Result<f64> {
    let stream = TcpStream::connect(addr).map_err(unreachable)?;
    stream.set_nodelay(true).map_err(unreachable)?;
    stream.set_read_timeout(Some(Duration::from_secs(600))).map_err(unreachable)?;
    let mut w = stream.try_clone().map_err(unreachable)?;
    let mut r = BufReader::new(stream);

    let start = Instant::now();
    let head = format!(
        "POST {SINK_PATH} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/octet-stream\r\nContent-Length: {len}\r\nConnection: close\r\n\r\n"
    );
    w.write_all(head.as_bytes()).map_err(unreachable)?;
    let block = vec![0u8; WRITE_BLOCK];
    let mut left = len;
    while left > 0 {
        let k = left.min(WRITE_BLOCK as u64) as usize;
        w.write_all(&block[..k]).map_err(unreachable)?;
        left -= k as u64;
    }
    w.flush().map_err(unreachable)?;
    let resp = http::read_response(&mut r).map_err(unreachable)?;
    let elapsed = start.elapsed().as_secs_f64();

    if resp.status != 200 {
        return Err(Error::Remote { status: resp.status, message: String::from_utf8_lossy(&resp.body).into() });
    }
    let echoed: u64 = String::from_utf8_lossy(&resp.body)
        .trim()
        .parse()
        .map_err(|_| Error::malformed("sink reply is not a byte count"))?;
    if echoed != len {
        return Err(Error::malformed(format!("sink received {echoed} of {len} bytes")));
    }
    Ok(elapsed)
}

/// Pushes `nbytes` through the proxy at `proxy` to an offload server's sink
/// and reports achieved goodput and the round-trip floor.
pub fn selftest_link(proxy: impl ToSocketAddrs, target_bps: f64, nbytes: u64) -> Result<SelftestReport> {
    let addr = proxy
        .to_socket_addrs()
        .map_err(unreachable)?
        .next()
        .ok_or_else(|| unreachable("proxy resolved to no address"))?;
    let mut rtt_floor_s = f64::INFINITY;
    for _ in 0..RTT_PROBES {
        rtt_floor_s = rtt_floor_s.min(sink_exchange(addr, 0)?);
    }
    let elapsed_s = sink_exchange(addr, nbytes)?;
    Ok(SelftestReport {
        target_bps,
        throughput_bps: 8.0 * nbytes as f64 / elapsed_s,
        rtt_floor_s,
        bytes: nbytes,
        elapsed_s,
    })
}
