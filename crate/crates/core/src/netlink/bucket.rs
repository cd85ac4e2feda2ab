use std::time::{Duration, Instant};

/// Token bucket counted in bytes. Tokens accrue continuously at `rate`
/// bytes per second up to `capacity`; a reservation may drive the balance
/// negative, and the caller waits for the debt to be repaid.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    /// Starts full.
    pub fn new(rate_bytes_per_sec: f64, capacity_bytes: usize, now: Instant) -> Self {
        assert!(rate_bytes_per_sec > 0.0);
        TokenBucket {
            rate: rate_bytes_per_sec,
            capacity: capacity_bytes as f64,
            tokens: capacity_bytes as f64,
            last: now,
        }
    }

    pub fn tokens(&self) -> f64 {
        self.tokens
    }

    fn refill(&mut self, now: Instant) {
        let dt = now.saturating_duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + dt * self.rate).min(self.capacity);
        self.last = now.max(self.last);
    }

    /// Takes `n` bytes of tokens and returns how long to wait before sending.
    pub fn reserve(&mut self, n: usize, now: Instant) -> Duration {
        self.refill(now);
        self.tokens -= n as f64;
        if self.tokens >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-self.tokens / self.rate)
        }
    }
}
