use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use super::config::ExperimentConfig;
use crate::codecs::{self, CodecKind};
use crate::error::{Error, Result};
use crate::metrics::{ExperimentRecord, Mode};
use crate::netlink::{shaping_proxy, ProxyHandle};
use crate::offload::{invoke_remote, serve, Registry, ServerHandle};
use crate::workloads::{gen_matrix, local_execute, OpKind};

/// Seed of the input matrix for one (op, n, rep) cell.
pub fn input_seed(seed: u64, op: OpKind, n: usize, rep: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (u64::from(op.wire_id()) << 56) ^ ((n as u64) << 20) ^ u64::from(rep)
}

fn validate(cfg: &ExperimentConfig) -> Result<Vec<(String, CodecKind)>> {
    let cfg_err = |m: &str| Err(Error::Config { line: None, message: m.into() });
    if cfg.ops.is_empty() {
        return cfg_err("no operations configured");
    }
    if cfg.sizes.is_empty() || cfg.sizes.contains(&0) {
        return cfg_err("sizes must be a non-empty list of positive integers");
    }
    if cfg.rates_mbps.is_empty() {
        return cfg_err("no rates configured");
    }
    if cfg.repetitions < 2 {
        return cfg_err("repetitions must be at least 2");
    }
    for &r in &cfg.rates_mbps {
        cfg.link(r).map_err(|e| Error::Config { line: None, message: e.to_string() })?;
    }
    cfg.resolved_codecs()
}

/// Runs the full factorial sweep described by `cfg`.
///
/// Records come out ordered by op, size, codec label, rate and repetition,
/// following the configured list orders.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let codecs = validate(cfg)?;
    let mut records = match cfg.mode {
        Mode::Model => run_model(cfg, &codecs)?,
        Mode::Live => run_live(cfg, &codecs)?,
    };
    let pos = |v: &[String], x: &str| v.iter().position(|c| c == x).unwrap_or(usize::MAX);
    let labels: Vec<String> = codecs.iter().map(|(l, _)| l.clone()).collect();
    let rates = cfg.rates_bps();
    records.sort_by_key(|r| {
        (
            cfg.ops.iter().position(|&o| o == r.op),
            cfg.sizes.iter().position(|&n| n == r.n),
            pos(&labels, &r.codec),
            rates.iter().position(|&b| b == r.rate_bps),
            r.rep,
        )
    });
    Ok(records)
}

/// Encoded request and response sizes per wire format for one (op, n).
type WireSizes = HashMap<CodecKind, (u64, u64)>;

fn wire_sizes(seed: u64, op: OpKind, n: usize, kinds: &[CodecKind]) -> Result<WireSizes> {
    let input = gen_matrix(input_seed(seed, op, n, 0), n)?;
    let output = op.apply(&input)?;
    let mut out = HashMap::new();
    for &k in kinds {
        let req = codecs::encode(k, &input)?.len() as u64;
        let resp = codecs::encode(k, &output)?.len() as u64;
        out.insert(k, (req, resp));
    }
    Ok(out)
}

/// Payload sizes for every (op, n) of the grid, computed on all cores.
pub(super) fn all_wire_sizes(
    cfg: &ExperimentConfig,
    kinds: &[CodecKind],
) -> Result<HashMap<(OpKind, usize), WireSizes>> {
    let jobs: Vec<(OpKind, usize)> = cfg.ops.iter().flat_map(|&op| cfg.sizes.iter().map(move |&n| (op, n))).collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(HashMap::new());
    let first_err = Mutex::new(None);
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(op, n)) = jobs.get(i) else { break };
                match wire_sizes(cfg.seed, op, n, kinds) {
                    Ok(w) => {
                        results.lock().unwrap().insert((op, n), w);
                    }
                    Err(e) => {
                        first_err.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results.into_inner().unwrap())
}

fn run_model(cfg: &ExperimentConfig, codecs: &[(String, CodecKind)]) -> Result<Vec<ExperimentRecord>> {
    let mut kinds: Vec<CodecKind> = codecs.iter().map(|&(_, k)| k).collect();
    kinds.dedup();
    let sizes = all_wire_sizes(cfg, &kinds)?;
    let mut out = Vec::new();
    for &op in &cfg.ops {
        for &n in &cfg.sizes {
            let t_local = cfg.cost.local_time(op, n);
            for (label, kind) in codecs {
                let cost = cfg.cost.codec(label).expect("label resolved against the cost model");
                let (req_bytes, resp_bytes) = sizes[&(op, n)][kind];
                for &mbps in &cfg.rates_mbps {
                    let link = cfg.link(mbps)?;
                    let timings = cfg.cost.stage_timings(cost, op, n, &link, req_bytes, resp_bytes);
                    for rep in 0..cfg.repetitions {
                        out.push(ExperimentRecord {
                            mode: Mode::Model,
                            op,
                            n,
                            rate_bps: super::config::mbps_to_bps(mbps),
                            codec: label.clone(),
                            rep,
                            t_local,
                            timings,
                            req_bytes,
                            resp_bytes,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_live(cfg: &ExperimentConfig, codecs: &[(String, CodecKind)]) -> Result<Vec<ExperimentRecord>> {
    let mut _server: Option<ServerHandle> = None;
    let upstream: SocketAddr = match &cfg.server {
        Some(addr) => {
            use std::net::ToSocketAddrs;
            addr.to_socket_addrs()
                .map_err(|e| Error::Config { line: None, message: format!("server {addr:?}: {e}") })?
                .next()
                .ok_or_else(|| Error::Config {
                    line: None,
                    message: format!("server {addr:?} resolved to no address"),
                })?
        }
        None => {
            let h = serve("127.0.0.1:0", Registry::standard())?;
            let a = h.local_addr();
            _server = Some(h);
            a
        }
    };
    let proxies: Vec<(u64, ProxyHandle)> = cfg
        .rates_mbps
        .iter()
        .map(|&mbps| Ok((super::config::mbps_to_bps(mbps), shaping_proxy("127.0.0.1:0", upstream, cfg.link(mbps)?)?)))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for &op in &cfg.ops {
        for &n in &cfg.sizes {
            for rep in 0..cfg.repetitions {
                let input = gen_matrix(input_seed(cfg.seed, op, n, rep), n)?;
                let (expected, t_local) = local_execute(op, &input)?;
                for (rate_bps, proxy) in &proxies {
                    for (label, kind) in codecs {
                        let inv = invoke_remote(proxy.local_addr(), op, *kind, &input)?;
                        if !inv.result.bit_eq(&expected) {
                            return Err(Error::Mismatch(format!(
                                "remote {op} n={n} codec={label} rep={rep} differs from the local result"
                            )));
                        }
                        out.push(ExperimentRecord {
                            mode: Mode::Live,
                            op,
                            n,
                            rate_bps: *rate_bps,
                            codec: label.clone(),
                            rep,
                            t_local,
                            timings: inv.timings,
                            req_bytes: inv.request_bytes as u64,
                            resp_bytes: inv.response_bytes as u64,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::parse_config;

    #[test]
    fn model_grid_shape_and_order() {
        let cfg = parse_config("ops = MUL, LN\nsizes = 6, 3\nrates_mbps = 10, 100\nrepetitions = 2").unwrap();
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 3 * 2 * 2);
        assert_eq!((recs[0].op, recs[0].n, recs[0].codec.as_str()), (OpKind::Mul, 6, "TEXT-slow"));
        assert_eq!(recs.last().unwrap().codec, "RAW");
        assert_eq!(recs.last().unwrap().op, OpKind::Ln);
        assert_eq!(recs.last().unwrap().n, 3);
        let raw = recs.iter().find(|r| r.codec == "RAW").unwrap();
        assert_eq!(raw.req_bytes, 12 + 8 * 36);
        assert_eq!(raw.resp_bytes, 12 + 8 * 36);
    }

    #[test]
    fn model_reps_identical() {
        let cfg = parse_config("ops = INV\nsizes = 5\nrates_mbps = 20\nrepetitions = 3").unwrap();
        let recs = run_experiment(&cfg).unwrap();
        for w in recs.chunks(3) {
            assert!(w.iter().all(|r| r.timings == w[0].timings && r.t_local == w[0].t_local));
        }
    }

    #[test]
    fn invalid_grids_are_config_errors() {
        let mut cfg = ExperimentConfig { sizes: vec![], ..Default::default() };
        assert!(run_experiment(&cfg).unwrap_err().is_config());
        cfg.sizes = vec![4];
        cfg.repetitions = 1;
        assert!(run_experiment(&cfg).unwrap_err().is_config());
    }

    #[test]
    fn live_small_grid() {
        let cfg = parse_config("mode = live\nops = MUL, INV\nsizes = 5\nrates_mbps = 100\nrepetitions = 2").unwrap();
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2);
        assert!(recs.iter().all(|r| r.mode == Mode::Live && r.timings.t_request > 0.0));
        assert_eq!(recs.iter().find(|r| r.codec == "RAW").unwrap().req_bytes, 12 + 8 * 25);
    }

    #[test]
    fn unreachable_external_server() {
        let cfg =
            parse_config("mode = live\nops = MUL\nsizes = 2\nrates_mbps = 100\nrepetitions = 2\nserver = 127.0.0.1:1")
                .unwrap();
        assert!(matches!(run_experiment(&cfg), Err(Error::Unreachable(_) | Error::Io(_))));
    }
}
