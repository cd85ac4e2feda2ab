//! Experiment configuration, the factorial sweep and its persistence.
//!
//! `model` mode replaces every measured duration with a deterministic cost
//! model over the real payload sizes, so two runs of the same configuration
//! produce identical records. `live` mode runs the kernels, the server and
//! one shaping proxy per rate on loopback.

mod analyze;
mod calibrate;
mod config;
mod cost;
mod records;
mod runner;

pub use analyze::{analyze, analyze_file, summary_path, AnalysisReport, CellRow, GroupReport};
pub use calibrate::{calibrate, Axis, CalibrationGrid, CalibrationReport};
pub use config::{
    load_config, mbps_to_bps, parse_config, ExperimentConfig, DEFAULT_RATES_MBPS, DEFAULT_REPETITIONS, DEFAULT_SIZES,
    LIVE_DEFAULT_CODECS,
};
pub use cost::{CodecCost, CostModel, ExecCost, QuadraticCost, DEFAULT_COST_MODEL};
pub use records::{read_records, read_records_file, write_records_file, RecordWriter, CSV_HEADER};
pub use runner::{input_seed, run_experiment};
