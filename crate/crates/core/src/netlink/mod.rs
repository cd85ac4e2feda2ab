//! Network emulation: a closed-form link model for deterministic runs and a
//! token-bucket shaping proxy for live runs on loopback.

mod bucket;
mod proxy;
mod selftest;

use crate::error::{Error, Result};

pub use bucket::TokenBucket;
pub use proxy::{shaping_proxy, ProxyHandle};
pub use selftest::{selftest_link, SelftestReport};

/// Bytes read from a socket per pacing step.
pub const CHUNK_BYTES: usize = 16 * 1024;
/// Default burst capacity of each direction's bucket.
pub const DEFAULT_BUCKET_BYTES: usize = 64 * 1024;

/// Emulated link: serialization rate, one-way latency and live-mode burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub rate_bps: f64,
    pub latency_s: f64,
    pub bucket_bytes: usize,
}

impl LinkParams {
    pub fn new(rate_bps: f64, latency_s: f64) -> Result<Self> {
        LinkParams { rate_bps, latency_s, bucket_bytes: DEFAULT_BUCKET_BYTES }.validated()
    }

    pub fn from_mbps(rate_mbps: f64, latency_ms: f64) -> Result<Self> {
        LinkParams::new(rate_mbps * 1e6, latency_ms * 1e-3)
    }

    pub fn with_bucket(self, bucket_bytes: usize) -> Result<Self> {
        LinkParams { bucket_bytes, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.rate_bps > 0.0 && self.rate_bps.is_finite()) {
            return Err(Error::invalid(format!("link rate must be positive, got {}", self.rate_bps)));
        }
        if !(self.latency_s >= 0.0 && self.latency_s.is_finite()) {
            return Err(Error::invalid(format!("link latency must be non-negative, got {}", self.latency_s)));
        }
        if self.bucket_bytes < CHUNK_BYTES {
            return Err(Error::invalid(format!(
                "bucket of {} bytes is smaller than the {CHUNK_BYTES}-byte pacing chunk",
                self.bucket_bytes
            )));
        }
        Ok(self)
    }
}

/// One-way latency plus serialization time of `nbytes` at the link rate.
pub fn transfer_time(link: &LinkParams, nbytes: u64) -> f64 {
    link.latency_s + 8.0 * nbytes as f64 / link.rate_bps
}
