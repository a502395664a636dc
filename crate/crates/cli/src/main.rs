//! `xlmimo`: run SER simulations, print complexity counts and run the
//! built-in self test.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xlmimo_core::benchmarks::{complexity, ComplexityMethod};
use xlmimo_core::fusion::FusionMode;
use xlmimo_core::harness::{
    parse_snr_range, run_experiment, selftest, write_csv, write_csv_to, DetectorKind, SimConfig,
};
use xlmimo_core::lpu::InitMethod;

#[derive(Parser, Debug)]
#[command(
    name = "xlmimo",
    version,
    about = "Distributed VMP detection for XL-MIMO uplinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Flat TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR grid in dB as `start:stop:step` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated detectors: vmp-sic, vmp-noniterative, mrc, zf, mfb or all.
    #[arg(long)]
    detector: Option<String>,
    /// all, pwr, nop or hyb.
    #[arg(long)]
    fusion: Option<FusionMode>,
    /// uniform, mrc-global, mrc-local, zf-global or zf-local.
    #[arg(long)]
    init: Option<InitMethod>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte Carlo SER experiment and write CSV.
    Simulate(SimulateArgs),
    /// Print closed-form multiplication counts.
    Complexity {
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        b: usize,
        /// Constellation size.
        #[arg(long, default_value_t = 4)]
        alphabet: usize,
        #[arg(long, default_value_t = 3)]
        bmax: usize,
        #[arg(long, default_value_t = 0.75)]
        p0: f64,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
    },
    /// Run the built-in oracle and invariant checks.
    Selftest,
}

fn simulate(args: SimulateArgs) -> xlmimo_core::Result<()> {
    let SimulateArgs {
        config,
        snr,
        trials,
        seed,
        detector,
        fusion,
        init,
        out,
    } = args;
    let mut cfg = match &config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(s) = snr {
        cfg.snr_db = parse_snr_range(&s)?;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = detector {
        cfg.detectors = DetectorKind::parse_list(&d)?;
    }
    if let Some(f) = fusion {
        cfg.fusion = f;
    }
    if let Some(i) = init {
        cfg.init = i;
    }
    if out.is_some() {
        cfg.output = out;
    }
    cfg.validate()?;
    log::info!(
        "simulating M={} K={} B={} over {} SNR points, {} trials each",
        cfg.channel.antennas,
        cfg.channel.users,
        cfg.channel.subarrays,
        cfg.snr_db.len(),
        cfg.trials
    );
    let records = run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => {
            write_csv(&records, path)?;
            log::info!("wrote {} records to {}", records.len(), path.display());
        }
        None => write_csv_to(&records, std::io::stdout().lock())?,
    }
    Ok(())
}

fn print_complexity(
    m: usize,
    k: usize,
    b: usize,
    alphabet: usize,
    bmax: usize,
    p0: f64,
    iterations: usize,
) -> xlmimo_core::Result<()> {
    println!("method,m,k,b,m_b,alphabet,b_max,multiplications,approximate");
    for method in ComplexityMethod::ALL {
        let r = complexity(method, m, k, b, alphabet, bmax, p0, iterations)?;
        println!(
            "{},{},{},{},{},{},{},{},{}",
            method.name(),
            r.m,
            r.k,
            r.b,
            r.m_b,
            r.alphabet,
            r.b_max,
            r.multiplications,
            r.approximate
        );
    }
    Ok(())
}

fn run_selftest() -> bool {
    let mut ok = true;
    for check in selftest() {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
        ok &= check.passed;
    }
    ok
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Complexity {
            m,
            k,
            b,
            alphabet,
            bmax,
            p0,
            iterations,
        } => print_complexity(m, k, b, alphabet, bmax, p0, iterations),
        Command::Selftest => {
            if run_selftest() {
                Ok(())
            } else {
                eprintln!("error: self test failed");
                return ExitCode::FAILURE;
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
