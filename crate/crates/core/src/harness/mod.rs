//! Monte Carlo symbol error rate experiments: configuration, the trial
//! driver and CSV output.

mod config;
mod experiment;
mod output;
mod selftest;

pub use config::{parse_snr_range, DetectorKind, SimConfig};
pub use experiment::{
    run_experiment, run_experiment_with_threads, ser_confidence, SerRecord, THREADS_ENV,
};
pub use output::{read_csv, write_csv, write_csv_to, CSV_HEADER};
pub use selftest::{selftest, SelfTestCheck};
