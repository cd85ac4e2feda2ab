//! Acceptance checks, one line per criterion. Exits non-zero if any fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use offbench_core::codecs::raw_len;
use offbench_core::experiment::{analyze, parse_config, read_records_file, run_experiment, RecordWriter};
use offbench_core::metrics::{exec_share, marshalling_ratio, mean_ci95};
use offbench_core::netlink::selftest_link;
use offbench_core::workloads::XorShift64Star;
use offbench_core::{
    decode, encode, gen_matrix, invoke_remote, local_execute, serve, shaping_proxy, transfer_time, CodecKind,
    LinkParams, Matrix, OpKind, Registry,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn finite_from_bits(rng: &mut XorShift64Star) -> f64 {
    loop {
        let x = f64::from_bits(rng.next_u64());
        if x.is_finite() {
            return x;
        }
    }
}

fn c1_codec_roundtrip() -> Outcome {
    let start = Instant::now();
    let mut rng = XorShift64Star::new(0xC0DEC);
    let fixtures = [
        Matrix::new(1, 4, vec![-0.0, 0.0, -0.0, 1.0]).unwrap(),
        Matrix::new(
            2,
            3,
            vec![5e-324, -5e-324, f64::from_bits(0x000F_FFFF_FFFF_FFFF), f64::MIN_POSITIVE, 1e-310, -0.0],
        )
        .unwrap(),
        Matrix::new(1, 3, vec![f64::MAX, f64::MIN, f64::EPSILON]).unwrap(),
    ];
    let mut count = 0;
    for kind in CodecKind::ALL {
        for i in 0..1000 {
            let m = if i < fixtures.len() {
                fixtures[i].clone()
            } else {
                let rows = 1 + (rng.next_u64() % 12) as usize;
                let cols = 1 + (rng.next_u64() % 12) as usize;
                let data = (0..rows * cols)
                    .map(|k| match (i + k) % 7 {
                        0 => f64::from_bits(rng.next_u64() & 0x000F_FFFF_FFFF_FFFF),
                        1 => -f64::from_bits(rng.next_u64() & 0x000F_FFFF_FFFF_FFFF),
                        2 => rng.next_unit_interval_shifted() - 1.5,
                        _ => finite_from_bits(&mut rng),
                    })
                    .collect();
                Matrix::new(rows, cols, data).unwrap()
            };
            let back = decode(kind, &encode(kind, &m).map_err(|e| e.to_string())?.bytes).map_err(|e| e.to_string())?;
            ensure!(back.bit_eq(&m), "{kind} matrix {i} differs after roundtrip");
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!("{count} matrices bit-identical in {secs:.2} s"))
}

fn c2_raw_framing() -> Outcome {
    let mut rng = XorShift64Star::new(2);
    for _ in 0..50 {
        let rows = 1 + (rng.next_u64() % 40) as usize;
        let cols = 1 + (rng.next_u64() % 40) as usize;
        let m = Matrix::filled(rows, cols, 0.5);
        let len = encode(CodecKind::Raw, &m).unwrap().len();
        ensure!(len == 12 + 8 * rows * cols, "{rows}x{cols} encoded to {len} bytes");
        ensure!(raw_len(rows, cols) == len, "raw_len disagrees for {rows}x{cols}");
    }
    let golden: [u8; 20] = [b'O', b'D', b'M', b'1', 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F];
    let got = encode(CodecKind::Raw, &Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap().bytes;
    ensure!(got == golden, "1x1 bytes {got:02x?}");
    Ok("50 shapes exact, 1x1 golden bytes match".into())
}

fn c3_link_model() -> Outcome {
    let mut rng = XorShift64Star::new(3);
    let mut unit = || rng.next_unit_interval_shifted() - 1.0;
    let mut worst: f64 = 0.0;
    let mut points = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let rate = 10f64.powf(3.0 + 7.0 * unit());
        let latency = unit() * 0.5;
        let nbytes = (unit() * 1e9) as u64;
        let link = LinkParams::new(rate, latency).unwrap();
        let got = transfer_time(&link, nbytes);
        let want = latency + 8.0 * nbytes as f64 / rate;
        let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        worst = worst.max(rel);
        points.push((link, nbytes, got));
    }
    ensure!(worst <= 1e-12, "worst relative error {worst:e}");
    for (link, nbytes, t) in &points {
        let more = transfer_time(link, nbytes + 1 + nbytes / 3);
        ensure!(more >= *t, "not non-decreasing in bytes at {link:?}");
        let faster = LinkParams::new(link.rate_bps * 1.5, link.latency_s).unwrap();
        ensure!(transfer_time(&faster, *nbytes) <= *t, "not non-increasing in rate at {link:?}");
        let slower_lat = LinkParams::new(link.rate_bps, link.latency_s + 0.01).unwrap();
        ensure!(transfer_time(&slower_lat, *nbytes) > *t, "not increasing in latency at {link:?}");
    }
    Ok(format!("1000 points, worst relative error {worst:e}, monotone"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn c4_live_smoke() -> Outcome {
    let start = Instant::now();
    let server = serve("127.0.0.1:0", Registry::standard()).map_err(|e| e.to_string())?;
    let slow = shaping_proxy("127.0.0.1:0", server.local_addr(), LinkParams::from_mbps(10.0, 0.0).unwrap())
        .map_err(|e| e.to_string())?;
    let fast = shaping_proxy("127.0.0.1:0", server.local_addr(), LinkParams::from_mbps(100.0, 0.0).unwrap())
        .map_err(|e| e.to_string())?;
    let m = gen_matrix(1, 100).unwrap();
    let (expected, _) = local_execute(OpKind::Mul, &m).unwrap();
    let mut detail = Vec::new();
    for codec in CodecKind::ALL {
        let at = |addr| -> Result<Vec<f64>, String> {
            (0..5)
                .map(|_| {
                    let inv = invoke_remote(addr, OpKind::Mul, codec, &m).map_err(|e| e.to_string())?;
                    if !inv.result.bit_eq(&expected) {
                        return Err(format!("{codec} result differs from local_execute"));
                    }
                    Ok(inv.timings.t_request)
                })
                .collect()
        };
        let t10 = median(at(slow.local_addr())?);
        let t100 = median(at(fast.local_addr())?);
        ensure!(t10 > t100, "{codec}: median t_request {t10:.4} s at 10 Mbps <= {t100:.4} s at 100 Mbps");
        detail.push(format!("{codec} {t10:.3}s>{t100:.3}s"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("bit-equal results; median t_request {} in {secs:.1} s", detail.join(", ")))
}

fn c5_shaped_throughput() -> Outcome {
    let server = serve("127.0.0.1:0", Registry::standard()).map_err(|e| e.to_string())?;
    let proxy = shaping_proxy("127.0.0.1:0", server.local_addr(), LinkParams::from_mbps(10.0, 0.0).unwrap())
        .map_err(|e| e.to_string())?;
    let r = selftest_link(proxy.local_addr(), 10e6, 25_000_000).map_err(|e| e.to_string())?;
    let mbps = r.throughput_bps / 1e6;
    ensure!((8.0..=12.0).contains(&mbps), "measured {mbps:.3} Mbps");
    Ok(format!("25 MB at {mbps:.3} Mbps in {:.1} s", r.elapsed_s))
}

fn c6_metrics_oracle() -> Outcome {
    let dir = env!("CARGO_MANIFEST_DIR");
    let recs = read_records_file(format!("{dir}/tests/fixtures/synthetic_live.csv")).map_err(|e| e.to_string())?;
    let report = analyze(&recs).map_err(|e| e.to_string())?;
    let golden = std::fs::read_to_string(format!("{dir}/tests/fixtures/synthetic_live.golden")).unwrap();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for line in golden.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let g = report.group(f[1].parse().unwrap(), f[2].parse().unwrap()).ok_or(format!("no group for {line}"))?;
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        let mut cmp = |got: f64, want: f64| worst = worst.max((got - want).abs());
        match f[0] {
            "cell" => {
                let c = g.cell(f[3], f[4].parse().unwrap()).ok_or(format!("no cell for {line}"))?;
                cmp(c.summary.local_mean, num(5));
                cmp(c.summary.local_ci.unwrap().half_width, num(6));
                cmp(c.summary.remote_mean, num(7));
                cmp(c.summary.remote_ci.unwrap().half_width, num(8));
                cmp(c.marshalling_ratio, num(9));
                cmp(c.alt_to_baseline, num(10));
                ensure!(c.decision.to_string() == f[11], "decision mismatch: {line}");
                ensure!(u8::from(c.summary.is_border()).to_string() == f[12], "border mismatch: {line}");
            }
            "decision" => {
                let bits: String = g.decision(f[3]).unwrap().bits.iter().map(u8::to_string).collect();
                ensure!(bits == f[4], "decision vector mismatch: {line}");
            }
            "penalty" => cmp(g.penalties.get(f[3]).unwrap(), num(4)),
            _ => return Err(format!("bad golden line {line}")),
        }
        n += 1;
    }
    ensure!(worst <= 1e-9, "worst absolute deviation {worst:e}");
    Ok(format!("{n} golden entries, worst deviation {worst:e}"))
}

struct ModelRuns {
    first: Vec<offbench_core::ExperimentRecord>,
    first_secs: f64,
    csv: [Vec<u8>; 2],
}

fn model_runs() -> Result<ModelRuns, String> {
    let cfg = parse_config("").map_err(|e| e.to_string())?;
    let mut csv: [Vec<u8>; 2] = Default::default();
    let mut first = Vec::new();
    let mut first_secs = 0.0;
    for (i, out) in csv.iter_mut().enumerate() {
        let start = Instant::now();
        let recs = run_experiment(&cfg).map_err(|e| e.to_string())?;
        if i == 0 {
            first_secs = start.elapsed().as_secs_f64();
        }
        let mut w = RecordWriter::new(Vec::new()).unwrap();
        for r in &recs {
            w.write(r).unwrap();
        }
        *out = w.finish().unwrap();
        if i == 0 {
            first = recs;
        }
    }
    Ok(ModelRuns { first, first_secs, csv })
}

fn c7_partition(runs: &ModelRuns) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in &runs.first {
        let sum = marshalling_ratio(&r.timings).map_err(|e| e.to_string())?
            + exec_share(&r.timings).map_err(|e| e.to_string())?;
        worst = worst.max((sum - 1.0).abs());
    }
    ensure!(worst <= 1e-12, "worst |sum - 1| = {worst:e}");
    Ok(format!("{} records, worst |sum - 1| = {worst:e}", runs.first.len()))
}

fn c8_model_orderings(runs: &ModelRuns) -> Outcome {
    let start = Instant::now();
    let report = analyze(&runs.first).map_err(|e| e.to_string())?;
    let mut min_ratio = f64::INFINITY;
    for op in [OpKind::Inv, OpKind::Ln] {
        for &n in &report.sizes {
            let g = report.group(op, n).unwrap();
            for (label, v) in &g.decisions {
                ensure!(v.sum() == 0, "{op} n={n} {label} decision vector {v}");
            }
            for c in &g.cells {
                min_ratio = min_ratio.min(c.marshalling_ratio);
            }
        }
    }
    ensure!(min_ratio >= 0.90, "INV/LN marshalling ratio falls to {min_ratio:.4}");
    for &n in &report.sizes {
        let g = report.group(OpKind::Mul, n).unwrap();
        let sum = |l: &str| g.decision(l).map(|v| v.sum()).ok_or(format!("no {l} at n={n}"));
        let (raw, fast, slow) = (sum("RAW")?, sum("TEXT-fast")?, sum("TEXT-slow")?);
        ensure!(raw >= fast && fast >= slow, "MUL n={n}: sums RAW {raw}, TEXT-fast {fast}, TEXT-slow {slow}");
        let p = |l: &str| g.penalties.get(l).unwrap();
        ensure!(
            p("RAW") <= p("TEXT-fast") && p("RAW") <= p("TEXT-slow"),
            "MUL n={n}: penalties RAW {}, TEXT-fast {}, TEXT-slow {}",
            p("RAW"),
            p("TEXT-fast"),
            p("TEXT-slow")
        );
    }
    let top = report.group(OpKind::Mul, 1200).ok_or("no MUL n=1200 group")?;
    let raw_top = top.decision("RAW").unwrap();
    ensure!(raw_top.bits.iter().all(|&b| b == 1), "MUL n=1200 RAW decision vector {raw_top}");
    let secs = runs.first_secs + start.elapsed().as_secs_f64();
    ensure!(secs < 120.0, "took {secs:.1} s");
    Ok(format!(
        "INV/LN all zero (min ratio {min_ratio:.4}); MUL sums and penalties ordered; n=1200 RAW {raw_top}; {secs:.1} s"
    ))
}

fn c9_determinism(runs: &ModelRuns) -> Outcome {
    ensure!(runs.csv[0] == runs.csv[1], "CSV outputs differ");
    Ok(format!("two runs, {} identical bytes", runs.csv[0].len()))
}

fn c10_confidence_interval() -> Outcome {
    let ci = mean_ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]).map_err(|e| e.to_string())?;
    let constant = mean_ci95(&[0.25; 7]).map_err(|e| e.to_string())?;
    ensure!(constant.half_width == 0.0, "constant samples give half-width {}", constant.half_width);
    ensure!(ci.mean == 3.0, "mean {}", ci.mean);
    ensure!(
        (ci.half_width - 1.9604).abs() <= 1e-3,
        "half-width {:.6} is outside 1.9604 +/- 1e-3 (t(0.975, 4) = 2.776445, s = 1.581139, n = 5)",
        ci.half_width
    );
    Ok(format!("half-width {:.6}, constant samples 0", ci.half_width))
}

fn run(id: u32, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let took = Duration::from_secs_f64(start.elapsed().as_secs_f64());
    match &outcome {
        Ok(msg) => println!("criterion {id:>2}: PASS  {msg} [{took:.1?}]"),
        Err(msg) => println!("criterion {id:>2}: FAIL  {msg} [{took:.1?}]"),
    }
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= run(1, c1_codec_roundtrip);
    ok &= run(2, c2_raw_framing);
    ok &= run(3, c3_link_model);
    ok &= run(4, c4_live_smoke);
    ok &= run(5, c5_shaped_throughput);
    ok &= run(6, c6_metrics_oracle);
    match model_runs() {
        Ok(runs) => {
            ok &= run(7, || c7_partition(&runs));
            ok &= run(8, || c8_model_orderings(&runs));
            ok &= run(9, || c9_determinism(&runs));
        }
        Err(e) => {
            for id in 7..=9 {
                println!("criterion {id:>2}: FAIL  model run failed: {e}");
            }
            ok = false;
        }
    }
    ok &= run(10, c10_confidence_interval);
    if !ok {
        std::process::exit(1);
    }
}
