//! Grid search for the default cost model.
//!
//! Only MUL marshalling and execution coefficients are searched. The
//! codec fixed cost is split evenly over the four codec passes of a call.
//! A candidate is scored by its smallest relative slack over these
//! constraints, and the best score wins (ties keep the earliest candidate):
//!
//! * smallest size: RAW offloads only at the fastest rate, TEXT codecs never;
//! * largest size: RAW offloads at every rate;
//! * every size: decision counts RAW >= TEXT-fast >= TEXT-slow and the RAW
//!   cumulative penalty is no larger than either TEXT one;
//! * INV and LN (fixed coefficients): never offload, marshalling ratio >= 0.9.

use std::collections::HashMap;
use std::sync::Mutex;
use std::thread;

use super::config::ExperimentConfig;
use super::cost::{CodecCost, CostModel, ExecCost, QuadraticCost};
use super::runner::all_wire_sizes;
use crate::codecs::{format_f64, CodecKind};
use crate::error::{Error, Result};
use crate::metrics::{decide, marshalling_ratio, remote_completion, wrong_decision_penalty};
use crate::netlink::LinkParams;
use crate::workloads::OpKind;

pub const LABELS: [&str; 3] = ["TEXT-slow", "TEXT-fast", "RAW"];
const MUL_SERVER: f64 = 2.5e-9;
const INV_EXEC: ExecCost = ExecCost { client: 1e-9, server: 1.2e-10 };
const LN_EXEC: ExecCost = ExecCost { client: 1e-8, server: 1e-9 };
const MIN_MARSHALLING: f64 = 0.9;

/// Integer grid `lo..=hi` step `step`, each point scaled by `1 / 10^exp`.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub lo: u32,
    pub hi: u32,
    pub step: u32,
    pub exp: i32,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        let d = 10f64.powi(self.exp);
        (self.lo..=self.hi).step_by(self.step as usize).map(|k| f64::from(k) / d).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrationGrid {
    /// Client minus server MUL coefficient.
    pub mul_gain: Axis,
    /// Per-pass codec fixed cost.
    pub codec_fixed: Axis,
    pub raw_per_element: Axis,
    pub text_fast_per_element: Axis,
    pub text_slow_per_element: Axis,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid {
            mul_gain: Axis { lo: 90, hi: 140, step: 2, exp: 10 },
            codec_fixed: Axis { lo: 0, hi: 40, step: 1, exp: 2 },
            raw_per_element: Axis { lo: 0, hi: 5, step: 1, exp: 8 },
            text_fast_per_element: Axis { lo: 0, hi: 100, step: 5, exp: 8 },
            text_slow_per_element: Axis { lo: 0, hi: 150, step: 5, exp: 7 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub model: CostModel,
    /// Smallest relative slack of the winning candidate; negative means no
    /// candidate met every constraint.
    pub margin: f64,
    pub evaluated: usize,
}

impl CalibrationReport {
    /// The model in config syntax, as committed for the defaults.
    pub fn render(&self) -> String {
        format!(
            "# Generated by `offbench calibrate`; minimum relative slack {}.\n{}",
            format_f64(self.margin),
            self.model.dump()
        )
    }
}

fn model(gain: f64, fixed: f64, per: [f64; 3]) -> CostModel {
    let q = |b| QuadraticCost { fixed, per_element: b };
    let codecs = LABELS
        .iter()
        .zip(per)
        .map(|(l, b)| CodecCost {
            label: l.to_string(),
            wire: if *l == "RAW" { CodecKind::Raw } else { CodecKind::Text },
            encode: q(b),
            decode: q(b),
        })
        .collect();
    let mut exec = std::collections::BTreeMap::new();
    exec.insert(OpKind::Mul, ExecCost { client: MUL_SERVER + gain, server: MUL_SERVER });
    exec.insert(OpKind::Inv, INV_EXEC);
    exec.insert(OpKind::Ln, LN_EXEC);
    CostModel { codecs, exec, server_overhead_s: 0.0 }
}

struct Ctx<'a> {
    sizes: &'a [usize],
    links: Vec<LinkParams>,
    wire: HashMap<(OpKind, usize), HashMap<CodecKind, (u64, u64)>>,
}

impl Ctx<'_> {
    fn remote(&self, m: &CostModel, c: &CodecCost, op: OpKind, n: usize) -> Vec<f64> {
        let (req, resp) = self.wire[&(op, n)][&c.wire];
        self.links.iter().map(|l| remote_completion(&m.stage_timings(c, op, n, l, req, resp))).collect()
    }

    /// Smallest relative slack of the MUL constraints; stops at the first
    /// violation.
    fn mul_margin(&self, m: &CostModel) -> f64 {
        let mut worst = f64::INFINITY;
        let last = self.links.len() - 1;
        for (i, &n) in self.sizes.iter().enumerate() {
            let local = m.local_time(OpKind::Mul, n);
            let r: Vec<Vec<f64>> = m.codecs.iter().map(|c| self.remote(m, c, OpKind::Mul, n)).collect();
            let (slow, fast, raw) = (&r[0], &r[1], &r[2]);
            if i == 0 {
                worst = worst.min((local - raw[last]) / local);
                if last > 0 {
                    worst = worst.min((raw[last - 1] - local) / local);
                }
                worst = worst.min((fast[last] - local) / local).min((slow[last] - local) / local);
            }
            if i == self.sizes.len() - 1 {
                worst = worst.min((local - raw[0]) / local);
            }
            let wins = |v: &[f64]| v.iter().map(|&t| decide(local, t) as usize).sum::<usize>();
            if !(wins(raw) >= wins(fast) && wins(fast) >= wins(slow)) {
                return -1.0;
            }
            let pen = |v: &[f64]| v.iter().map(|&t| wrong_decision_penalty(local, t)).sum::<f64>();
            let (pr, pf, ps) = (pen(raw), pen(fast), pen(slow));
            if pr > 0.0 {
                worst = worst.min((pf - pr) / pr).min((ps - pr) / pr);
            }
            if worst <= 0.0 {
                return worst;
            }
        }
        worst
    }

    fn other_ops_margin(&self, m: &CostModel) -> f64 {
        let mut worst = f64::INFINITY;
        for op in [OpKind::Inv, OpKind::Ln] {
            for &n in self.sizes {
                let local = m.local_time(op, n);
                for c in &m.codecs {
                    let (req, resp) = self.wire[&(op, n)][&c.wire];
                    for l in &self.links {
                        let t = m.stage_timings(c, op, n, l, req, resp);
                        let remote = remote_completion(&t);
                        worst = worst.min((remote - local) / local);
                        let ratio = marshalling_ratio(&t).unwrap_or(0.0);
                        worst = worst.min((ratio - MIN_MARSHALLING) / MIN_MARSHALLING);
                    }
                }
            }
        }
        worst
    }
}

/// Searches `grid` over the sizes and rates of `cfg` (ops and codecs of
/// `cfg` are ignored) using real payload sizes from `cfg.seed`.
pub fn calibrate(cfg: &ExperimentConfig, grid: &CalibrationGrid) -> Result<CalibrationReport> {
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() || cfg.rates_mbps.is_empty() {
        return Err(Error::Config { line: None, message: "calibration needs sizes and rates".into() });
    }
    let mut rates = cfg.rates_mbps.clone();
    rates.sort_by(f64::total_cmp);
    let links = rates.iter().map(|&r| cfg.link(r)).collect::<Result<Vec<_>>>()?;
    let probe = ExperimentConfig { ops: OpKind::ALL.to_vec(), sizes: sizes.clone(), ..cfg.clone() };
    let wire = all_wire_sizes(&probe, &CodecKind::ALL)?;
    let ctx = Ctx { sizes: &sizes, links, wire };

    let gains = grid.mul_gain.values();
    let fixed = grid.codec_fixed.values();
    let raw = grid.raw_per_element.values();
    let fast = grid.text_fast_per_element.values();
    let slow = grid.text_slow_per_element.values();

    // Best candidate per gain value, searched in parallel.
    let best: Mutex<Vec<Option<(f64, CostModel)>>> = Mutex::new(vec![None; gains.len()]);
    let evaluated = Mutex::new(0usize);
    thread::scope(|s| {
        for (gi, &g) in gains.iter().enumerate() {
            let (ctx, fixed, raw, fast, slow, best, evaluated) = (&ctx, &fixed, &raw, &fast, &slow, &best, &evaluated);
            s.spawn(move || {
                let mut local_best: Option<(f64, CostModel)> = None;
                let mut count = 0;
                for &a in fixed {
                    for &br in raw {
                        for &bf in fast {
                            for &bs in slow {
                                if bs < bf || bf < br {
                                    continue;
                                }
                                count += 1;
                                let m = model(g, a, [bs, bf, br]);
                                let mut score = ctx.mul_margin(&m);
                                if local_best.as_ref().is_some_and(|(b, _)| score <= *b) {
                                    continue;
                                }
                                score = score.min(ctx.other_ops_margin(&m));
                                if local_best.as_ref().is_none_or(|(b, _)| score > *b) {
                                    local_best = Some((score, m));
                                }
                            }
                        }
                    }
                }
                best.lock().unwrap()[gi] = local_best;
                *evaluated.lock().unwrap() += count;
            });
        }
    });
    let mut winner: Option<(f64, CostModel)> = None;
    for (score, m) in best.into_inner().unwrap().into_iter().flatten() {
        if winner.as_ref().is_none_or(|(b, _)| score > *b) {
            winner = Some((score, m));
        }
    }
    let (margin, model) = winner.ok_or_else(|| Error::invalid("calibration grid has no admissible candidate"))?;
    Ok(CalibrationReport { model, margin, evaluated: evaluated.into_inner().unwrap() })
}
