use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::records::read_records_file;
use crate::codecs::format_f64;
use crate::error::{Error, Result};
use crate::metrics::{
    alt_to_baseline_ratio, cell_summary, comm_time, cumulative_penalty_vector, decide, decision_vector,
    marshalling_ratio, wrong_decision_penalty, CellSummary, DecisionVector, ExperimentRecord, MeanCi, Mode,
    PenaltyVector,
};
use crate::workloads::OpKind;

/// One (op, n, codec, rate) cell with its derived measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub summary: CellSummary,
    pub comm_s: f64,
    pub marshalling_ratio: f64,
    /// Remote completion relative to the baseline codec at the same rate.
    pub alt_to_baseline: f64,
    pub decision: u8,
    pub penalty_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub op: OpKind,
    pub n: usize,
    /// Codec-major, rates ascending within each codec.
    pub cells: Vec<CellRow>,
    pub decisions: Vec<(String, DecisionVector)>,
    pub penalties: PenaltyVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub mode: Mode,
    pub ops: Vec<OpKind>,
    pub sizes: Vec<usize>,
    pub rates_bps: Vec<u64>,
    /// First label is the baseline for alt-to-baseline ratios.
    pub codecs: Vec<String>,
    pub groups: Vec<GroupReport>,
}

fn first_appearance<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Summarises a complete grid of records.
///
/// Ops and codec labels keep their order of first appearance, sizes and
/// rates are sorted ascending. Every op x size x codec x rate cell must be
/// present.
pub fn analyze(records: &[ExperimentRecord]) -> Result<AnalysisReport> {
    let first = records.first().ok_or_else(|| Error::IncompleteGrid("no records".into()))?;
    if let Some(r) = records.iter().find(|r| r.mode != first.mode) {
        return Err(Error::Schema(format!("records mix modes {} and {}", first.mode, r.mode)));
    }
    let ops = first_appearance(records.iter().map(|r| r.op));
    let codecs = first_appearance(records.iter().map(|r| r.codec.clone()));
    let mut sizes = first_appearance(records.iter().map(|r| r.n));
    sizes.sort_unstable();
    let mut rates_bps = first_appearance(records.iter().map(|r| r.rate_bps));
    rates_bps.sort_unstable();

    let mut missing = Vec::new();
    for &op in &ops {
        for &n in &sizes {
            for c in &codecs {
                for &rate in &rates_bps {
                    if !records.iter().any(|r| r.op == op && r.n == n && &r.codec == c && r.rate_bps == rate) {
                        missing.push(format!("op={op} n={n} codec={c} rate_bps={rate}"));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteGrid(format!("missing cells: {}", missing.join("; "))));
    }

    let mut groups = Vec::new();
    for &op in &ops {
        for &n in &sizes {
            let group: Vec<ExperimentRecord> = records.iter().filter(|r| r.op == op && r.n == n).cloned().collect();
            let summaries: Vec<Vec<CellSummary>> = codecs
                .iter()
                .map(|c| {
                    rates_bps.iter().map(|&rate| cell_summary(&group, op, n, c, rate).expect("grid checked")).collect()
                })
                .collect();
            let mut cells = Vec::new();
            for per_codec in &summaries {
                for (i, s) in per_codec.iter().enumerate() {
                    cells.push(CellRow {
                        comm_s: comm_time(&s.mean_timings),
                        marshalling_ratio: marshalling_ratio(&s.mean_timings)?,
                        alt_to_baseline: alt_to_baseline_ratio(s.remote_mean, summaries[0][i].remote_mean)?,
                        decision: decide(s.local_mean, s.remote_mean),
                        penalty_s: wrong_decision_penalty(s.local_mean, s.remote_mean),
                        summary: s.clone(),
                    });
                }
            }
            let decisions = codecs
                .iter()
                .map(|c| {
                    let rs: Vec<ExperimentRecord> = group.iter().filter(|r| &r.codec == c).cloned().collect();
                    Ok((c.clone(), decision_vector(&rs, &rates_bps)?))
                })
                .collect::<Result<_>>()?;
            let penalties = cumulative_penalty_vector(&group, &rates_bps, &codecs)?;
            groups.push(GroupReport { op, n, cells, decisions, penalties });
        }
    }
    Ok(AnalysisReport { mode: first.mode, ops, sizes, rates_bps, codecs, groups })
}

fn ci_text(ci: Option<MeanCi>) -> String {
    ci.map_or_else(|| "-".to_string(), |c| format!("{:.6}", c.half_width))
}

impl AnalysisReport {
    /// Plain-text tables, one block per (op, n).
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let reps = self.groups.first().and_then(|g| g.cells.first()).map_or(0, |c| c.summary.count);
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(
            s,
            "grid: {} ops x {} sizes x {} rates x {} codecs, {} reps in the first cell",
            self.ops.len(),
            self.sizes.len(),
            self.rates_bps.len(),
            self.codecs.len(),
            reps
        );
        let _ = writeln!(s, "rates_bps: {}", self.rates_bps.iter().map(u64::to_string).collect::<Vec<_>>().join(" "));
        let _ = writeln!(s, "baseline codec: {}", self.codecs[0]);
        let _ = writeln!(
            s,
            "times in seconds; ci = 95% half-width; * = local mean inside remote ci; ! = clamped comm time"
        );
        for g in &self.groups {
            let _ = writeln!(s);
            let _ = writeln!(s, "== {} n={} ==", g.op, g.n);
            let head = format!(
                "{:<12} {:>11} {:>4} {:>12} {:>10} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7} {:>8} {:>3} {:>10} {}",
                "codec", "rate_bps", "reps", "local", "ci", "remote", "ci", "enc_cli", "request", "dec_cli",
                "srv_dec", "srv_exec", "srv_enc", "comm", "marsh", "vs_base", "dec", "penalty", "flags"
            );
            let _ = writeln!(s, "{head}");
            for c in &g.cells {
                let m = &c.summary;
                let t = &m.mean_timings;
                let mut flags = String::new();
                if m.is_border() {
                    flags.push('*');
                }
                if m.inconsistent > 0 {
                    flags.push('!');
                }
                let line = format!(
                    "{:<12} {:>11} {:>4} {:>12.6} {:>10} {:>12.6} {:>10} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>7.4} {:>8.4} {:>3} {:>10.6} {}",
                    m.codec,
                    m.rate_bps,
                    m.count,
                    m.local_mean,
                    ci_text(m.local_ci),
                    m.remote_mean,
                    ci_text(m.remote_ci),
                    t.t_encode_client,
                    t.t_request,
                    t.t_decode_client,
                    t.t_srv_decode,
                    t.t_srv_exec,
                    t.t_srv_encode,
                    c.comm_s,
                    c.marshalling_ratio,
                    c.alt_to_baseline,
                    c.decision,
                    c.penalty_s,
                    flags
                );
                let _ = writeln!(s, "{}", line.trim_end());
            }
            let _ = writeln!(s, "decision vectors:");
            for (label, v) in &g.decisions {
                let _ = writeln!(s, "  {:<12} {} sum={}", label, v, v.sum());
            }
            let _ = writeln!(s, "cumulative penalty:");
            for (label, p) in &g.penalties.entries {
                let _ = writeln!(s, "  {:<12} {:.6}", label, p);
            }
        }
        s
    }

    pub const SUMMARY_HEADER: [&'static str; 22] = [
        "op",
        "n",
        "codec",
        "rate_bps",
        "reps",
        "local_mean_s",
        "local_ci_s",
        "remote_mean_s",
        "remote_ci_s",
        "enc_cli_s",
        "request_s",
        "dec_cli_s",
        "srv_dec_s",
        "srv_exec_s",
        "srv_enc_s",
        "comm_s",
        "marshalling_ratio",
        "alt_to_baseline",
        "decision",
        "penalty_s",
        "border",
        "inconsistent",
    ];

    /// One row per cell; floats in shortest round-trip form, empty CI
    /// fields for single-repetition cells.
    pub fn write_summary_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(Self::SUMMARY_HEADER)?;
        let ci = |c: Option<MeanCi>| c.map_or_else(String::new, |c| format_f64(c.half_width));
        for g in &self.groups {
            for c in &g.cells {
                let m = &c.summary;
                let t = &m.mean_timings;
                out.write_record([
                    m.op.name().to_string(),
                    m.n.to_string(),
                    m.codec.clone(),
                    m.rate_bps.to_string(),
                    m.count.to_string(),
                    format_f64(m.local_mean),
                    ci(m.local_ci),
                    format_f64(m.remote_mean),
                    ci(m.remote_ci),
                    format_f64(t.t_encode_client),
                    format_f64(t.t_request),
                    format_f64(t.t_decode_client),
                    format_f64(t.t_srv_decode),
                    format_f64(t.t_srv_exec),
                    format_f64(t.t_srv_encode),
                    format_f64(c.comm_s),
                    format_f64(c.marshalling_ratio),
                    format_f64(c.alt_to_baseline),
                    c.decision.to_string(),
                    format_f64(c.penalty_s),
                    u8::from(m.is_border()).to_string(),
                    m.inconsistent.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn group(&self, op: OpKind, n: usize) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.op == op && g.n == n)
    }
}

impl GroupReport {
    pub fn decision(&self, codec: &str) -> Option<&DecisionVector> {
        self.decisions.iter().find(|(c, _)| c == codec).map(|(_, v)| v)
    }

    pub fn cell(&self, codec: &str, rate_bps: u64) -> Option<&CellRow> {
        self.cells.iter().find(|c| c.summary.codec == codec && c.summary.rate_bps == rate_bps)
    }
}

/// Where [`analyze_file`] puts the summary CSV next to the text report.
pub fn summary_path(report: &Path) -> PathBuf {
    report.with_extension("summary.csv")
}

/// Reads `input`, writes the text report to `out` and the summary CSV to
/// [`summary_path`]`(out)`.
pub fn analyze_file(input: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<AnalysisReport> {
    let records = read_records_file(input)?;
    let report = analyze(&records)?;
    let out = out.as_ref();
    std::fs::write(out, report.render_text())?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(summary_path(out))?);
    report.write_summary_csv(&mut f)?;
    f.flush()?;
    Ok(report)
}
