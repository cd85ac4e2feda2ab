use std::collections::BTreeMap;

use crate::codecs::{format_f64, CodecKind};
use crate::metrics::StageTimings;
use crate::netlink::{transfer_time, LinkParams};
use crate::workloads::OpKind;

/// The committed default calibration, in config-file syntax.
pub const DEFAULT_COST_MODEL: &str = include_str!("../../data/default-cost-model.conf");

/// `fixed + per_element * n^2` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub fixed: f64,
    pub per_element: f64,
}

impl QuadraticCost {
    pub fn at(&self, n: usize) -> f64 {
        let n = n as f64;
        self.fixed + self.per_element * n * n
    }
}

/// Marshalling cost of one codec label on either host.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecCost {
    pub label: String,
    pub wire: CodecKind,
    pub encode: QuadraticCost,
    pub decode: QuadraticCost,
}

/// Kernel cost `coefficient * n^p` on each host, `p` from [`OpKind::work_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecCost {
    pub client: f64,
    pub server: f64,
}

/// Deterministic stand-in for hardware timings.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub codecs: Vec<CodecCost>,
    pub exec: BTreeMap<OpKind, ExecCost>,
    pub server_overhead_s: f64,
}

fn work(op: OpKind, n: usize) -> f64 {
    (n as f64).powi(op.work_exponent())
}

impl CostModel {
    pub fn codec(&self, label: &str) -> Option<&CodecCost> {
        self.codecs.iter().find(|c| c.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.codecs.iter().map(|c| c.label.clone()).collect()
    }

    fn exec_cost(&self, op: OpKind) -> ExecCost {
        self.exec.get(&op).copied().unwrap_or(ExecCost { client: 0.0, server: 0.0 })
    }

    pub fn local_time(&self, op: OpKind, n: usize) -> f64 {
        self.exec_cost(op).client * work(op, n)
    }

    pub fn server_exec_time(&self, op: OpKind, n: usize) -> f64 {
        self.exec_cost(op).server * work(op, n)
    }

    /// Stage timings of one modeled invocation. The round trip is the
    /// request transfer, the server stages, the fixed server overhead and
    /// the response transfer.
    pub fn stage_timings(
        &self,
        codec: &CodecCost,
        op: OpKind,
        n: usize,
        link: &LinkParams,
        req_bytes: u64,
        resp_bytes: u64,
    ) -> StageTimings {
        let t_srv_decode = codec.decode.at(n);
        let t_srv_exec = self.server_exec_time(op, n);
        let t_srv_encode = codec.encode.at(n);
        let comm = transfer_time(link, req_bytes) + transfer_time(link, resp_bytes) + self.server_overhead_s;
        StageTimings {
            t_encode_client: codec.encode.at(n),
            t_request: comm + (t_srv_decode + t_srv_exec + t_srv_encode),
            t_decode_client: codec.decode.at(n),
            t_srv_decode,
            t_srv_exec,
            t_srv_encode,
        }
    }

    /// `cost.*` lines in config syntax.
    pub fn dump(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(", ");
        let mut out = format!("cost.server_overhead_s = {}\n", format_f64(self.server_overhead_s));
        for (op, e) in &self.exec {
            out.push_str(&format!("cost.exec.{} = {}\n", op.name(), join(&[e.client, e.server])));
        }
        for c in &self.codecs {
            out.push_str(&format!(
                "cost.codec.{} = {}, {}\n",
                c.label,
                c.wire.name(),
                join(&[c.encode.fixed, c.encode.per_element, c.decode.fixed, c.decode.per_element])
            ));
        }
        out
    }
}
