use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use offbench_core::experiment::{
    analyze_file, calibrate, load_config, run_experiment, summary_path, write_records_file, CalibrationGrid,
    ExperimentConfig,
};
use offbench_core::netlink::{selftest_link, LinkParams};
use offbench_core::{serve, shaping_proxy, Error, Mode, Registry};

/// Benchmark harness for offloading matrix kernels over shaped links.
#[derive(Parser)]
#[command(name = "offbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve MUL, INV and LN over HTTP until killed.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
    /// Forward TCP to an upstream through a rate- and latency-shaped link.
    Proxy {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        upstream: String,
        #[arg(long)]
        rate_mbps: f64,
        #[arg(long, default_value_t = 0.0)]
        latency_ms: f64,
        /// Burst per direction.
        #[arg(long, default_value_t = offbench_core::netlink::DEFAULT_BUCKET_BYTES)]
        bucket_bytes: usize,
    },
    /// Run a factorial sweep and write one CSV row per repetition.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the mode in the config file.
        #[arg(long, value_parser = ["live", "model"])]
        mode: Option<String>,
        /// Defaults to the config's `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a run CSV into a text report and a summary CSV.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure throughput and round trip through a running proxy.
    SelftestLink {
        #[arg(long)]
        proxy: String,
        #[arg(long)]
        rate_mbps: f64,
        #[arg(long, default_value_t = 25_000_000)]
        bytes: u64,
    },
    /// Search cost-model coefficients and print them in config syntax.
    Calibrate {
        /// Sizes, rates, latency and seed are taken from here.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_error(message: String) -> Error {
    Error::Config { line: None, message }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Serve { listen } => {
            let h = serve(listen.as_str(), Registry::standard())?;
            eprintln!("serving on {}", h.local_addr());
            h.wait();
        }
        Command::Proxy { listen, upstream, rate_mbps, latency_ms, bucket_bytes } => {
            let link = LinkParams::from_mbps(rate_mbps, latency_ms)
                .and_then(|l| l.with_bucket(bucket_bytes))
                .map_err(|e| config_error(e.to_string()))?;
            let h = shaping_proxy(listen.as_str(), upstream.as_str(), link)?;
            eprintln!("proxy on {} -> {upstream} at {rate_mbps} Mbps, {latency_ms} ms", h.local_addr());
            h.wait();
        }
        Command::Run { config, mode, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(m) = mode {
                cfg.mode = m.parse::<Mode>()?;
            }
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| config_error("no output path: pass --out or set `output`".into()))?;
            let records = run_experiment(&cfg)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_records_file(&out, &records)?;
            eprintln!("{} records ({} mode) written to {}", records.len(), cfg.mode, out.display());
        }
        Command::Analyze { input, out } => {
            let report = analyze_file(&input, &out)?;
            eprintln!(
                "{} groups; report {} and summary {}",
                report.groups.len(),
                out.display(),
                summary_path(&out).display()
            );
        }
        Command::SelftestLink { proxy, rate_mbps, bytes } => {
            if !(rate_mbps > 0.0 && rate_mbps.is_finite()) {
                return Err(config_error(format!("rate must be positive, got {rate_mbps}")));
            }
            let r = selftest_link(proxy.as_str(), rate_mbps * 1e6, bytes)?;
            println!(
                "target {:.3} Mbps, measured {:.3} Mbps ({:+.1}%), rtt floor {:.3} ms, {} bytes in {:.3} s",
                r.target_bps / 1e6,
                r.throughput_bps / 1e6,
                100.0 * r.relative_error(),
                r.rtt_floor_s * 1e3,
                r.bytes,
                r.elapsed_s
            );
            if !r.passed() {
                return Err(Error::InvalidArgument("throughput outside 10% of the target".into()));
            }
        }
        Command::Calibrate { config, out } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => ExperimentConfig::default(),
            };
            let report = calibrate(&cfg, &CalibrationGrid::default())?;
            eprintln!("{} candidates, best minimum slack {}", report.evaluated, report.margin);
            match out {
                Some(p) => std::fs::write(p, report.render())?,
                None => print!("{}", report.render()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("offbench: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
