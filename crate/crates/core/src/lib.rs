//! Benchmark harness for computation offloading of matrix kernels.
//!
//! The pieces, bottom-up:
//!
//! * [`workloads`]: deterministic inputs and the MUL / INV / LN kernels.
//! * [`codecs`]: TEXT (JSON) and RAW (framed binary) marshalling.
//! * [`netlink`]: closed-form link model and a token-bucket shaping proxy.
//! * [`offload`]: HTTP function-call server and client with stage timings.
//! * [`metrics`]: completion-time decomposition, decision vectors,
//!   penalties and confidence intervals.
//! * [`experiment`]: configuration, factorial sweeps, CSV persistence and
//!   the analysis report.

// NaN must fail positivity checks, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codecs;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod netlink;
pub mod offload;
pub mod workloads;

pub use codecs::{decode, encode, CodecKind, Payload};
pub use error::{Error, Result};
pub use metrics::{ExperimentRecord, Mode, StageTimings};
pub use netlink::{shaping_proxy, transfer_time, LinkParams};
pub use offload::{invoke_remote, serve, Registry};
pub use workloads::{gen_matrix, local_execute, Matrix, OpKind};
