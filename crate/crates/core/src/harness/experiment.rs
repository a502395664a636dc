use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectorKind, SimConfig};
use crate::benchmarks::{central_mrc, central_zf, matched_filter_bound};
use crate::channel::generate_block;
use crate::error::{Error, Result};
use crate::fusion::{detect_noniterative, sic_detect, ReceiverConfig};
use crate::lpu::InitMethod;
use crate::numerics::{sample_cgauss_vector, CVector, SimRng};

/// Environment variable holding the worker-thread count. Results do not
/// depend on it.
pub const THREADS_ENV: &str = "XLMIMO_THREADS";

const CHANNEL_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;

/// Symbol error count of one detector at one SNR point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerRecord {
    pub method: String,
    pub snr_db: f64,
    pub errors: u64,
    pub symbols: u64,
    pub ser: f64,
    /// Half-width of the 95% normal-approximation interval on `ser`.
    pub ci95: f64,
    pub seed: u64,
    pub config_digest: String,
}

/// `(errors / symbols, 1.96 · sqrt(p (1 - p) / symbols))`.
pub fn ser_confidence(errors: u64, symbols: u64) -> (f64, f64) {
    if symbols == 0 {
        return (0.0, 0.0);
    }
    let n = symbols as f64;
    let p = errors as f64 / n;
    (p, 1.96 * (p * (1.0 - p) / n).sqrt())
}

/// Runs the experiment with the worker count taken from [`THREADS_ENV`].
pub fn run_experiment(cfg: &SimConfig) -> Result<Vec<SerRecord>> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?),
        Err(_) => None,
    };
    run_experiment_with_threads(cfg, threads)
}

/// Runs every selected detector on the same channels, symbols and noise for
/// each SNR point. Channels come in refresh blocks; every block and every
/// trial draws from its own seeded stream, so the result is independent of
/// `threads`.
pub fn run_experiment_with_threads(
    cfg: &SimConfig,
    threads: Option<usize>,
) -> Result<Vec<SerRecord>> {
    cfg.validate()?;
    if threads == Some(0) {
        return Err(Error::Config("thread count must be positive".into()));
    }
    let digest = cfg.digest()?;
    let period = cfg.channel.refresh_period;
    let blocks = cfg.trials.div_ceil(period);
    let receivers: Vec<ReceiverConfig> = cfg
        .snr_db
        .iter()
        .map(|snr| cfg.receiver(10f64.powf(-snr / 10.0)))
        .collect();

    let work = || -> Result<Vec<Vec<Vec<u64>>>> {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let count = period.min(cfg.trials - b * period);
                run_block(cfg, &receivers, b, count)
            })
            .collect()
    };
    let per_block = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut totals = vec![vec![0u64; cfg.detectors.len()]; cfg.snr_db.len()];
    for block in &per_block {
        for (s, row) in block.iter().enumerate() {
            for (d, e) in row.iter().enumerate() {
                totals[s][d] += e;
            }
        }
    }
    let symbols = (cfg.trials * cfg.channel.users) as u64;
    let mut records = Vec::with_capacity(cfg.snr_db.len() * cfg.detectors.len());
    for (s, &snr_db) in cfg.snr_db.iter().enumerate() {
        for (d, det) in cfg.detectors.iter().enumerate() {
            let errors = totals[s][d];
            let (ser, ci95) = ser_confidence(errors, symbols);
            records.push(SerRecord {
                method: det.name().to_string(),
                snr_db,
                errors,
                symbols,
                ser,
                ci95,
                seed: cfg.seed,
                config_digest: digest.clone(),
            });
        }
    }
    sort_records(&mut records);
    Ok(records)
}

pub(super) fn sort_records(records: &mut [SerRecord]) {
    records.sort_by(|a, b| a.method.cmp(&b.method).then(a.snr_db.total_cmp(&b.snr_db)));
}

/// Error counts `[snr][detector]` for one refresh block.
fn run_block(
    cfg: &SimConfig,
    receivers: &[ReceiverConfig],
    block: usize,
    count: usize,
) -> Result<Vec<Vec<u64>>> {
    let needs_rank = cfg.detectors.contains(&DetectorKind::Zf) || cfg.init == InitMethod::ZfGlobal;
    let mut chan_rng = SimRng::stream(cfg.seed, &[CHANNEL_STREAM, block as u64]);
    let realizations =
        generate_block(&cfg.channel, cfg.scenario, count, needs_rank, &mut chan_rng)?;
    let alphabet = &receivers[0].alphabet;
    let (m, k) = (cfg.channel.antennas, cfg.channel.users);
    let mut errors = vec![vec![0u64; cfg.detectors.len()]; cfg.snr_db.len()];

    for (t, real) in realizations.iter().enumerate() {
        let mut rng = SimRng::stream(cfg.seed, &[DATA_STREAM, block as u64, t as u64]);
        let symbols: Vec<usize> = (0..k).map(|_| rng.index(alphabet.len())).collect();
        let x = CVector::from_iterator(k, symbols.iter().map(|&s| alphabet.point(s)));
        let unit_noise = sample_cgauss_vector(&mut rng, m, 1.0)?;
        let h = real.h();
        let clean = h * &x;
        for (s, rx) in receivers.iter().enumerate() {
            let noise = &unit_noise * num_complex::Complex64::new(rx.noise_var.sqrt(), 0.0);
            let y = &clean + &noise;
            for (d, det) in cfg.detectors.iter().enumerate() {
                let detected = match det {
                    DetectorKind::VmpSic => sic_detect(&y, h, rx)?.symbols,
                    DetectorKind::VmpNoniterative => detect_noniterative(&y, h, rx)?.symbols,
                    DetectorKind::Mrc => central_mrc(&y, h, alphabet).symbols,
                    DetectorKind::Zf => central_zf(&y, h, alphabet)?.symbols,
                    DetectorKind::Mfb => {
                        matched_filter_bound(h, &symbols, &noise, alphabet)?.symbols
                    }
                };
                errors[s][d] += detected
                    .iter()
                    .zip(&symbols)
                    .filter(|(a, b)| a != b)
                    .count() as u64;
            }
        }
    }
    Ok(errors)
}
