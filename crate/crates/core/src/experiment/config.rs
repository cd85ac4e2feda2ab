//! Line-oriented experiment configuration.
//!
//! One `key = value` per line; `#` starts a comment; lists are
//! comma-separated. Recognised keys:
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `ops` | subset of `MUL, INV, LN` | all three |
//! | `sizes` | matrix sizes | `400, 500, ..., 1200` |
//! | `rates_mbps` | link rates | `10, 20, 40, 60, 80, 100` |
//! | `latency_ms` | one-way latency | `0` |
//! | `codecs` | codec labels | cost-model labels (model), `TEXT, RAW` (live) |
//! | `repetitions` | at least 2 | `40` |
//! | `seed` | unsigned integer | `1` |
//! | `mode` | `live` or `model` | `model` |
//! | `server` | live-mode server address | in-process server |
//! | `bucket_bytes` | live-mode burst per direction | `65536` |
//! | `output` | CSV path | none |
//! | `cost.server_overhead_s` | seconds per request | `0` |
//! | `cost.exec.<OP>` | `client_coeff, server_coeff` | committed calibration |
//! | `cost.codec.<LABEL>` | `TEXT|RAW, enc_fixed, enc_per_elem, dec_fixed, dec_per_elem` | committed calibration |
//!
//! The first `cost.codec.*` line replaces the whole default codec table.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use super::cost::{CodecCost, CostModel, ExecCost, QuadraticCost, DEFAULT_COST_MODEL};
use crate::codecs::{format_f64, CodecKind};
use crate::error::{Error, Result};
use crate::metrics::Mode;
use crate::netlink::{LinkParams, CHUNK_BYTES, DEFAULT_BUCKET_BYTES};
use crate::workloads::OpKind;

pub const DEFAULT_SIZES: [usize; 9] = [400, 500, 600, 700, 800, 900, 1000, 1100, 1200];
pub const DEFAULT_RATES_MBPS: [f64; 6] = [10.0, 20.0, 40.0, 60.0, 80.0, 100.0];
pub const DEFAULT_REPETITIONS: u32 = 40;
pub const LIVE_DEFAULT_CODECS: [&str; 2] = ["TEXT", "RAW"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ops: Vec<OpKind>,
    pub sizes: Vec<usize>,
    pub rates_mbps: Vec<f64>,
    pub latency_ms: f64,
    /// `None` selects the mode's default labels.
    pub codecs: Option<Vec<String>>,
    pub repetitions: u32,
    pub seed: u64,
    pub mode: Mode,
    pub server: Option<String>,
    pub bucket_bytes: usize,
    pub output: Option<PathBuf>,
    pub cost: CostModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ops: OpKind::ALL.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
            rates_mbps: DEFAULT_RATES_MBPS.to_vec(),
            latency_ms: 0.0,
            codecs: None,
            repetitions: DEFAULT_REPETITIONS,
            seed: 1,
            mode: Mode::Model,
            server: None,
            bucket_bytes: DEFAULT_BUCKET_BYTES,
            output: None,
            cost: CostModel::default(),
        }
    }
}

impl Default for CostModel {
    /// The committed calibration.
    fn default() -> Self {
        let empty = CostModel { codecs: Vec::new(), exec: BTreeMap::new(), server_overhead_s: 0.0 };
        parse_with_cost(DEFAULT_COST_MODEL, empty).expect("committed cost model parses").cost
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line: Some(line), message: message.into() }
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_f64(line: usize, key: &str, s: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().map_err(|_| config_err(line, format!("{key}: {s:?} is not a number")))?;
    if !x.is_finite() {
        return Err(config_err(line, format!("{key}: {s:?} is not finite")));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| config_err(line, format!("{key}: {s:?} is not a non-negative integer")))
}

fn non_negative(line: usize, key: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|&&v| v < 0.0) {
        Some(v) => Err(config_err(line, format!("{key}: coefficient {v} is negative"))),
        None => Ok(()),
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Parses configuration text, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_with_cost(text, CostModel::default())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
    parse_config(&text)
}

fn parse_with_cost(text: &str, cost: CostModel) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        ops: OpKind::ALL.to_vec(),
        sizes: DEFAULT_SIZES.to_vec(),
        rates_mbps: DEFAULT_RATES_MBPS.to_vec(),
        latency_ms: 0.0,
        codecs: None,
        repetitions: DEFAULT_REPETITIONS,
        seed: 1,
        mode: Mode::Model,
        server: None,
        bucket_bytes: DEFAULT_BUCKET_BYTES,
        output: None,
        cost,
    };
    let mut seen = HashSet::new();
    let mut codec_table_reset = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(config_err(line, format!("duplicate key {key}")));
        }

        match key {
            "ops" => {
                let ops = list(value)
                    .into_iter()
                    .map(|s| s.parse::<OpKind>().map_err(|e| config_err(line, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if ops.is_empty() {
                    return Err(config_err(line, "ops must not be empty"));
                }
                cfg.ops = ops;
            }
            "sizes" => {
                let sizes =
                    list(value).into_iter().map(|s| parse_int::<usize>(line, key, s)).collect::<Result<Vec<_>>>()?;
                if sizes.is_empty() || sizes.contains(&0) {
                    return Err(config_err(line, "sizes must be a non-empty list of positive integers"));
                }
                cfg.sizes = sizes;
            }
            "rates_mbps" => {
                let rates = list(value).into_iter().map(|s| parse_f64(line, key, s)).collect::<Result<Vec<_>>>()?;
                if rates.is_empty() || rates.iter().any(|&r| r <= 0.0) {
                    return Err(config_err(line, "rates_mbps must be a non-empty list of positive numbers"));
                }
                cfg.rates_mbps = rates;
            }
            "latency_ms" => {
                let l = parse_f64(line, key, value)?;
                if l < 0.0 {
                    return Err(config_err(line, "latency_ms must be non-negative"));
                }
                cfg.latency_ms = l;
            }
            "codecs" => {
                let labels: Vec<String> = list(value).into_iter().map(String::from).collect();
                if labels.is_empty() {
                    return Err(config_err(line, "codecs must not be empty"));
                }
                if let Some(bad) = labels.iter().find(|l| !valid_label(l)) {
                    return Err(config_err(line, format!("invalid codec label {bad:?}")));
                }
                let unique: HashSet<_> = labels.iter().collect();
                if unique.len() != labels.len() {
                    return Err(config_err(line, "codec labels must be unique"));
                }
                cfg.codecs = Some(labels);
            }
            "repetitions" => {
                let r: u32 = parse_int(line, key, value)?;
                if r < 2 {
                    return Err(config_err(line, format!("repetitions must be at least 2, got {r}")));
                }
                cfg.repetitions = r;
            }
            "seed" => cfg.seed = parse_int(line, key, value)?,
            "mode" => cfg.mode = value.parse().map_err(|e: Error| config_err(line, e.to_string()))?,
            "server" => {
                if value.is_empty() {
                    return Err(config_err(line, "server must not be empty"));
                }
                cfg.server = Some(value.to_string());
            }
            "bucket_bytes" => {
                let b: usize = parse_int(line, key, value)?;
                if b < CHUNK_BYTES {
                    return Err(config_err(line, format!("bucket_bytes must be at least {CHUNK_BYTES}")));
                }
                cfg.bucket_bytes = b;
            }
            "output" => cfg.output = Some(PathBuf::from(value)),
            "cost.server_overhead_s" => {
                let o = parse_f64(line, key, value)?;
                non_negative(line, key, &[o])?;
                cfg.cost.server_overhead_s = o;
            }
            _ => {
                if let Some(op) = key.strip_prefix("cost.exec.") {
                    let op: OpKind = op.parse().map_err(|e: Error| config_err(line, e.to_string()))?;
                    let parts = list(value);
                    if parts.len() != 2 {
                        return Err(config_err(line, format!("{key} needs `client, server` coefficients")));
                    }
                    let client = parse_f64(line, key, parts[0])?;
                    let server = parse_f64(line, key, parts[1])?;
                    non_negative(line, key, &[client, server])?;
                    cfg.cost.exec.insert(op, ExecCost { client, server });
                } else if let Some(label) = key.strip_prefix("cost.codec.") {
                    if !valid_label(label) {
                        return Err(config_err(line, format!("invalid codec label {label:?}")));
                    }
                    let parts = list(value);
                    if parts.len() != 5 {
                        return Err(config_err(
                            line,
                            format!("{key} needs `WIRE, enc_fixed, enc_per_elem, dec_fixed, dec_per_elem`"),
                        ));
                    }
                    let wire: CodecKind = parts[0].parse().map_err(|e: Error| config_err(line, e.to_string()))?;
                    let nums = parts[1..].iter().map(|s| parse_f64(line, key, s)).collect::<Result<Vec<_>>>()?;
                    non_negative(line, key, &nums)?;
                    if !codec_table_reset {
                        cfg.cost.codecs.clear();
                        codec_table_reset = true;
                    }
                    cfg.cost.codecs.push(CodecCost {
                        label: label.to_string(),
                        wire,
                        encode: QuadraticCost { fixed: nums[0], per_element: nums[1] },
                        decode: QuadraticCost { fixed: nums[2], per_element: nums[3] },
                    });
                } else {
                    return Err(config_err(line, format!("unknown key {key:?}")));
                }
            }
        }
    }
    Ok(cfg)
}

impl ExperimentConfig {
    /// Codec labels for the sweep and the wire format each one uses.
    ///
    /// A label found in the cost model uses its table entry; otherwise it
    /// must name a wire format directly (`TEXT` or `RAW`), which is only
    /// meaningful in live mode.
    pub fn resolved_codecs(&self) -> Result<Vec<(String, CodecKind)>> {
        let labels: Vec<String> = match (&self.codecs, self.mode) {
            (Some(l), _) => l.clone(),
            (None, Mode::Model) => self.cost.labels(),
            (None, Mode::Live) => LIVE_DEFAULT_CODECS.iter().map(|s| s.to_string()).collect(),
        };
        if labels.is_empty() {
            return Err(Error::Config { line: None, message: "no codec labels configured".into() });
        }
        labels
            .into_iter()
            .map(|label| {
                if let Some(c) = self.cost.codec(&label) {
                    return Ok((label, c.wire));
                }
                if self.mode == Mode::Model {
                    return Err(Error::Config {
                        line: None,
                        message: format!("codec label {label:?} has no cost.codec entry"),
                    });
                }
                let wire = label.parse::<CodecKind>().map_err(|_| Error::Config {
                    line: None,
                    message: format!("codec label {label:?} names no wire format"),
                })?;
                Ok((label, wire))
            })
            .collect()
    }

    pub fn rates_bps(&self) -> Vec<u64> {
        self.rates_mbps.iter().map(|&m| mbps_to_bps(m)).collect()
    }

    pub fn link(&self, rate_mbps: f64) -> Result<LinkParams> {
        LinkParams::new(mbps_to_bps(rate_mbps) as f64, self.latency_ms * 1e-3)?.with_bucket(self.bucket_bytes)
    }

    /// Canonical text that [`parse_config`] maps back to `self`.
    pub fn dump(&self) -> String {
        let join_f = |v: &[f64]| v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("ops", self.ops.iter().map(|o| o.name()).collect::<Vec<_>>().join(", "));
        kv("sizes", self.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "));
        kv("rates_mbps", join_f(&self.rates_mbps));
        kv("latency_ms", format_f64(self.latency_ms));
        if let Some(c) = &self.codecs {
            kv("codecs", c.join(", "));
        }
        kv("repetitions", self.repetitions.to_string());
        kv("seed", self.seed.to_string());
        kv("mode", self.mode.name().to_string());
        if let Some(s) = &self.server {
            kv("server", s.clone());
        }
        kv("bucket_bytes", self.bucket_bytes.to_string());
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        out.push_str(&self.cost.dump());
        out
    }
}

pub fn mbps_to_bps(mbps: f64) -> u64 {
    (mbps * 1e6).round() as u64
}
