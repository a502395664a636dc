use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{gaussian_to_pmf, Constellation, SymbolPmf};
use crate::error::{Error, Result};
use crate::numerics::{zero_forcing_filters, CMatrix, CVector};

const MIN_INIT_VAR: f64 = 1e-12;

/// How the LPU marginals are seeded before a VMP pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    Uniform,
    /// MRC over the whole array, replicated to every LPU.
    MrcGlobal,
    /// MRC per sub-array on its own slice.
    MrcLocal,
    /// ZF over the whole array, replicated to every LPU.
    ZfGlobal,
    /// ZF per sub-array; falls back to local MRC where the local channel is
    /// rank deficient.
    ZfLocal,
}

/// When initialisation happens during SIC detection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Initialise before the first SIC step only; later steps continue from
    /// the previous local marginals.
    OneTime,
    /// Re-initialise on the cancelled signal before every SIC step.
    #[default]
    PerSicStep,
}

impl std::str::FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitMethod::Uniform),
            "mrc-global" => Ok(InitMethod::MrcGlobal),
            "mrc-local" => Ok(InitMethod::MrcLocal),
            "zf-global" => Ok(InitMethod::ZfGlobal),
            "zf-local" => Ok(InitMethod::ZfLocal),
            other => Err(Error::Config(format!("unknown init method `{other}`"))),
        }
    }
}

pub fn init_uniform(users: usize, alphabet: &Constellation) -> Vec<SymbolPmf> {
    vec![SymbolPmf::uniform(alphabet.len()); users]
}

/// MRC initial marginals for the `active` users from a precomputed Gram
/// matrix `G = Hᴴ H` and matched-filter outputs `matched[k] = h_kᴴ y`.
///
/// Mean `h_kᴴy / ‖h_k‖²`; variance
/// `(Σ_{k'≠k} |h_kᴴh_k'|² + ‖h_k‖² σ²) / ‖h_k‖⁴` with unit symbol power.
pub fn mrc_from_gram(
    gram: &CMatrix,
    matched: &[Complex64],
    active: &[usize],
    noise_var: f64,
    alphabet: &Constellation,
) -> Result<Vec<SymbolPmf>> {
    active
        .iter()
        .map(|&k| {
            let energy = gram[(k, k)].re;
            if energy <= 0.0 {
                return Ok(SymbolPmf::uniform(alphabet.len()));
            }
            let interference: f64 = active
                .iter()
                .filter(|&&j| j != k)
                .map(|&j| gram[(k, j)].norm_sqr())
                .sum();
            let var = ((interference + energy * noise_var) / (energy * energy)).max(MIN_INIT_VAR);
            gaussian_to_pmf(matched[k] / energy, var, alphabet)
        })
        .collect()
}

/// MRC initial marginals for every column of `h`.
pub fn init_mrc(
    h: &CMatrix,
    y: &CVector,
    noise_var: f64,
    alphabet: &Constellation,
) -> Result<Vec<SymbolPmf>> {
    check_signal(h, y)?;
    let gram = h.adjoint() * h;
    let matched: Vec<Complex64> = h.column_iter().map(|c| c.dotc(y)).collect();
    let active: Vec<usize> = (0..h.ncols()).collect();
    mrc_from_gram(&gram, &matched, &active, noise_var, alphabet)
}

/// ZF initial marginals: mean `F_ZF,k y`, variance `σ² / (h_kᴴ P⊥ h_k)`.
pub fn init_zf(
    h: &CMatrix,
    y: &CVector,
    noise_var: f64,
    alphabet: &Constellation,
) -> Result<Vec<SymbolPmf>> {
    check_signal(h, y)?;
    let bank = zero_forcing_filters(h)?;
    let estimates = &bank.filters * y;
    estimates
        .iter()
        .zip(&bank.gains)
        .map(|(x, g)| gaussian_to_pmf(*x, (noise_var / g).max(MIN_INIT_VAR), alphabet))
        .collect()
}

fn check_signal(h: &CMatrix, y: &CVector) -> Result<()> {
    if h.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "channel has {} rows, signal has {}",
            h.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Rows of sub-array `b` when the array is cut into blocks of `per_block`
/// consecutive antennas.
pub fn subarray_view(h: &CMatrix, y: &CVector, b: usize, per_block: usize) -> (CMatrix, CVector) {
    let start = b * per_block;
    (
        h.rows(start, per_block).into_owned(),
        y.rows(start, per_block).into_owned(),
    )
}

/// Initial marginals for every LPU (outer index) and every column of `h`
/// (inner index).
pub fn initialize(
    method: InitMethod,
    h: &CMatrix,
    y: &CVector,
    subarrays: usize,
    noise_var: f64,
    alphabet: &Constellation,
) -> Result<Vec<Vec<SymbolPmf>>> {
    check_signal(h, y)?;
    if subarrays == 0 || !h.nrows().is_multiple_of(subarrays) {
        return Err(Error::Config(format!(
            "{} antennas cannot be split into {subarrays} sub-arrays",
            h.nrows()
        )));
    }
    let per_block = h.nrows() / subarrays;
    let replicated = |q: Vec<SymbolPmf>| vec![q; subarrays];
    match method {
        InitMethod::Uniform => Ok(replicated(init_uniform(h.ncols(), alphabet))),
        InitMethod::MrcGlobal => Ok(replicated(init_mrc(h, y, noise_var, alphabet)?)),
        InitMethod::ZfGlobal => Ok(replicated(init_zf(h, y, noise_var, alphabet)?)),
        InitMethod::MrcLocal => (0..subarrays)
            .map(|b| {
                let (hb, yb) = subarray_view(h, y, b, per_block);
                init_mrc(&hb, &yb, noise_var, alphabet)
            })
            .collect(),
        InitMethod::ZfLocal => (0..subarrays)
            .map(|b| {
                let (hb, yb) = subarray_view(h, y, b, per_block);
                match init_zf(&hb, &yb, noise_var, alphabet) {
                    Err(Error::SingularChannel { condition }) => {
                        log::debug!(
                            "sub-array {b}: local ZF undefined (condition {condition:.3e}), using local MRC"
                        );
                        init_mrc(&hb, &yb, noise_var, alphabet)
                    }
                    other => other,
                }
            })
            .collect(),
    }
}
