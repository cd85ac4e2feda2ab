use std::fmt;

use super::{mean_ci95, ExperimentRecord, MeanCi, StageTimings};
use crate::error::{Error, Result};
use crate::workloads::OpKind;

/// 1 when the remote path is strictly faster; ties keep the work local.
pub fn decide(t_local: f64, t_remote: f64) -> u8 {
    u8::from(t_remote < t_local)
}

/// Time lost by picking the slower of the two sites, whichever it is.
pub fn wrong_decision_penalty(t_local: f64, t_remote: f64) -> f64 {
    (t_remote - t_local).abs()
}

/// Completion time of an alternative codec relative to the baseline codec.
pub fn alt_to_baseline_ratio(t_alt: f64, t_baseline: f64) -> Result<f64> {
    if !(t_baseline > 0.0) {
        return Err(Error::UndefinedRatio(format!("baseline completion time is {t_baseline}")));
    }
    Ok(t_alt / t_baseline)
}

/// Aggregate of all repetitions in one (op, n, codec, rate) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub op: OpKind,
    pub n: usize,
    pub codec: String,
    pub rate_bps: u64,
    pub count: usize,
    pub local_mean: f64,
    pub remote_mean: f64,
    /// `None` with fewer than two repetitions.
    pub local_ci: Option<MeanCi>,
    pub remote_ci: Option<MeanCi>,
    pub mean_timings: StageTimings,
    /// Records whose server stages exceed their round trip.
    pub inconsistent: usize,
}

impl CellSummary {
    /// The local mean falls inside the remote confidence interval, so the
    /// decision for this cell is not statistically settled.
    pub fn is_border(&self) -> bool {
        self.remote_ci.is_some_and(|ci| ci.contains(self.local_mean))
    }
}

fn cell_name(op: OpKind, n: usize, codec: &str, rate_bps: u64) -> String {
    format!("op={op} n={n} codec={codec} rate_bps={rate_bps}")
}

pub fn cell_summary(
    records: &[ExperimentRecord],
    op: OpKind,
    n: usize,
    codec: &str,
    rate_bps: u64,
) -> Option<CellSummary> {
    let cell: Vec<&ExperimentRecord> =
        records.iter().filter(|r| r.op == op && r.n == n && r.codec == codec && r.rate_bps == rate_bps).collect();
    if cell.is_empty() {
        return None;
    }
    let local: Vec<f64> = cell.iter().map(|r| r.t_local).collect();
    let remote: Vec<f64> = cell.iter().map(|r| r.remote_completion()).collect();
    let k = cell.len() as f64;
    Some(CellSummary {
        op,
        n,
        codec: codec.to_string(),
        rate_bps,
        count: cell.len(),
        local_mean: local.iter().sum::<f64>() / k,
        remote_mean: remote.iter().sum::<f64>() / k,
        local_ci: mean_ci95(&local).ok(),
        remote_ci: mean_ci95(&remote).ok(),
        mean_timings: StageTimings::mean(cell.iter().map(|r| &r.timings)).expect("non-empty cell"),
        inconsistent: cell.iter().filter(|r| !r.timings.is_consistent()).count(),
    })
}

fn require_cell(records: &[ExperimentRecord], op: OpKind, n: usize, codec: &str, rate_bps: u64) -> Result<CellSummary> {
    cell_summary(records, op, n, codec, rate_bps)
        .ok_or_else(|| Error::IncompleteGrid(format!("missing cell {}", cell_name(op, n, codec, rate_bps))))
}

/// Offloading decision per rate, in the order of the rate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector {
    pub bits: Vec<u8>,
}

impl DecisionVector {
    /// Number of rates at which offloading wins.
    pub fn sum(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("]")
    }
}

fn single_group(records: &[ExperimentRecord]) -> Result<(OpKind, usize, &str)> {
    let first = records.first().ok_or_else(|| Error::IncompleteGrid("no records".into()))?;
    if let Some(r) = records.iter().find(|r| r.op != first.op || r.n != first.n || r.codec != first.codec) {
        return Err(Error::invalid(format!(
            "records mix groups ({} n={} {}) and ({} n={} {})",
            first.op, first.n, first.codec, r.op, r.n, r.codec
        )));
    }
    Ok((first.op, first.n, &first.codec))
}

/// Decision bits over `rates` for records sharing one (op, n, codec),
/// comparing mean local time with mean remote completion per rate.
pub fn decision_vector(records: &[ExperimentRecord], rates: &[u64]) -> Result<DecisionVector> {
    let (op, n, codec) = single_group(records)?;
    let bits = rates
        .iter()
        .map(|&rate| require_cell(records, op, n, codec, rate).map(|c| decide(c.local_mean, c.remote_mean)))
        .collect::<Result<_>>()?;
    Ok(DecisionVector { bits })
}

/// Per-codec sums of wrong-decision penalties over the rate set.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyVector {
    pub entries: Vec<(String, f64)>,
}

impl PenaltyVector {
    pub fn get(&self, codec: &str) -> Option<f64> {
        self.entries.iter().find(|(c, _)| c == codec).map(|(_, v)| *v)
    }
}

/// Cumulative penalty per codec label for records sharing one (op, n).
pub fn cumulative_penalty_vector(
    records: &[ExperimentRecord],
    rates: &[u64],
    codecs: &[String],
) -> Result<PenaltyVector> {
    let first = records.first().ok_or_else(|| Error::IncompleteGrid("no records".into()))?;
    let (op, n) = (first.op, first.n);
    if records.iter().any(|r| r.op != op || r.n != n) {
        return Err(Error::invalid("records mix (op, n) groups"));
    }
    let mut entries = Vec::with_capacity(codecs.len());
    for codec in codecs {
        let mut total = 0.0;
        for &rate in rates {
            let c = require_cell(records, op, n, codec, rate)?;
            total += wrong_decision_penalty(c.local_mean, c.remote_mean);
        }
        entries.push((codec.clone(), total));
    }
    Ok(PenaltyVector { entries })
}
