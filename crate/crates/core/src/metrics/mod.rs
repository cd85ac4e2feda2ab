//! Stage-decomposed completion times and the offloading decision measures.
//!
//! A remote call is split into client encode, request round trip and client
//! decode; the server reports its decode, execute and encode stages. Pure
//! communication time is never measured directly: it is whatever part of the
//! round trip the server does not account for.

mod analytics;
mod stats;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::workloads::OpKind;

pub use analytics::{
    alt_to_baseline_ratio, cell_summary, cumulative_penalty_vector, decide, decision_vector, wrong_decision_penalty,
    CellSummary, DecisionVector, PenaltyVector,
};
pub use stats::{mean_ci95, t_quantile_975, MeanCi};

/// Durations of one offloaded invocation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub t_encode_client: f64,
    pub t_request: f64,
    pub t_decode_client: f64,
    pub t_srv_decode: f64,
    pub t_srv_exec: f64,
    pub t_srv_encode: f64,
}

impl StageTimings {
    pub fn server_total(&self) -> f64 {
        self.t_srv_decode + self.t_srv_exec + self.t_srv_encode
    }

    /// False when the server stages exceed the round trip, which happens
    /// only through clock resolution or skew; [`comm_time`] clamps then.
    pub fn is_consistent(&self) -> bool {
        self.t_request >= self.server_total()
    }

    /// Field-wise mean.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a StageTimings>) -> Option<StageTimings> {
        let mut acc = StageTimings::default();
        let mut n = 0usize;
        for t in items {
            acc.t_encode_client += t.t_encode_client;
            acc.t_request += t.t_request;
            acc.t_decode_client += t.t_decode_client;
            acc.t_srv_decode += t.t_srv_decode;
            acc.t_srv_exec += t.t_srv_exec;
            acc.t_srv_encode += t.t_srv_encode;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let k = n as f64;
        Some(StageTimings {
            t_encode_client: acc.t_encode_client / k,
            t_request: acc.t_request / k,
            t_decode_client: acc.t_decode_client / k,
            t_srv_decode: acc.t_srv_decode / k,
            t_srv_exec: acc.t_srv_exec / k,
            t_srv_encode: acc.t_srv_encode / k,
        })
    }
}

/// Inferred network time: round trip minus server stages, clamped at zero.
pub fn comm_time(t: &StageTimings) -> f64 {
    (t.t_request - t.server_total()).max(0.0)
}

/// Client-observed completion time of the remote path.
pub fn remote_completion(t: &StageTimings) -> f64 {
    t.t_encode_client + t.t_request + t.t_decode_client
}

/// Share of the remote completion time spent marshalling: encoding and
/// decoding on both hosts plus communication.
pub fn marshalling_ratio(t: &StageTimings) -> Result<f64> {
    let total = remote_completion(t);
    if !(total > 0.0) {
        return Err(Error::UndefinedRatio(format!("remote completion time is {total}")));
    }
    let marshalling = t.t_encode_client + t.t_decode_client + t.t_srv_decode + t.t_srv_encode + comm_time(t);
    Ok(marshalling / total)
}

/// Share of the remote completion time spent executing the kernel.
pub fn exec_share(t: &StageTimings) -> Result<f64> {
    let total = remote_completion(t);
    if !(total > 0.0) {
        return Err(Error::UndefinedRatio(format!("remote completion time is {total}")));
    }
    Ok(t.t_srv_exec / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Live,
    Model,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Live => "live",
            Mode::Model => "model",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "model" => Ok(Mode::Model),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// One repetition of one cell of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub mode: Mode,
    pub op: OpKind,
    pub n: usize,
    pub rate_bps: u64,
    pub codec: String,
    pub rep: u32,
    pub t_local: f64,
    pub timings: StageTimings,
    pub req_bytes: u64,
    pub resp_bytes: u64,
}

impl ExperimentRecord {
    pub fn remote_completion(&self) -> f64 {
        remote_completion(&self.timings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(enc: f64, req: f64, dec: f64, sd: f64, se: f64, sn: f64) -> StageTimings {
        StageTimings {
            t_encode_client: enc,
            t_request: req,
            t_decode_client: dec,
            t_srv_decode: sd,
            t_srv_exec: se,
            t_srv_encode: sn,
        }
    }

    #[test]
    fn comm_time_cases() {
        assert!((comm_time(&t(0.0, 1.0, 0.0, 0.2, 0.5, 0.1)) - 0.2).abs() < 1e-15);
        assert_eq!(comm_time(&t(0.0, 1.0, 0.0, 0.25, 0.5, 0.25)), 0.0);
        let skewed = t(0.0, 0.7, 0.0, 0.2, 0.5, 0.1);
        assert_eq!(comm_time(&skewed), 0.0);
        assert!(!skewed.is_consistent());
    }

    #[test]
    fn remote_completion_cases() {
        assert!((remote_completion(&t(0.1, 1.0, 0.2, 0.0, 0.0, 0.0)) - 1.3).abs() < 1e-15);
        assert_eq!(remote_completion(&StageTimings::default()), 0.0);
    }

    #[test]
    fn marshalling_ratio_cases() {
        assert_eq!(marshalling_ratio(&t(0.1, 1.0, 0.2, 0.1, 0.0, 0.1)).unwrap(), 1.0);
        assert_eq!(marshalling_ratio(&t(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)).unwrap(), 0.0);
        assert!(matches!(marshalling_ratio(&StageTimings::default()), Err(Error::UndefinedRatio(_))));
        // 0.1 + 0.2 + 0.05 + 0.05 + (1.0 - 0.6) = 0.8 out of 1.3
        let r = marshalling_ratio(&t(0.1, 1.0, 0.2, 0.05, 0.5, 0.05)).unwrap();
        assert!((r - 0.8 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn mean_of_timings() {
        let a = t(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let b = t(3.0, 4.0, 5.0, 6.0, 7.0, 8.0);
        assert_eq!(StageTimings::mean([&a, &b]).unwrap(), t(2.0, 3.0, 4.0, 5.0, 6.0, 7.0));
        assert_eq!(StageTimings::mean(std::iter::empty()), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn consistent_timings() -> impl Strategy<Value = StageTimings> {
            (0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64, 1e-6..5.0f64).prop_map(
                |(enc, dec, sd, se, sn, comm, exec_floor)| StageTimings {
                    t_encode_client: enc,
                    t_request: sd + se + exec_floor + sn + comm,
                    t_decode_client: dec,
                    t_srv_decode: sd,
                    t_srv_exec: se + exec_floor,
                    t_srv_encode: sn,
                },
            )
        }

        proptest! {
            #[test]
            fn decomposition_is_a_partition(t in consistent_timings()) {
                let sum = marshalling_ratio(&t).unwrap() + exec_share(&t).unwrap();
                prop_assert!((sum - 1.0).abs() <= 1e-12, "{}", sum);
            }

            #[test]
            fn ratio_stays_in_unit_interval(t in consistent_timings()) {
                let r = marshalling_ratio(&t).unwrap();
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }
}
