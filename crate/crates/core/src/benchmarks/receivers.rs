use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fusion::DetectionResult;
use crate::lpu::Constellation;
use crate::numerics::{zero_forcing_filters, CMatrix, CVector};

fn linear_result(
    estimates: impl Iterator<Item = Complex64>,
    alphabet: &Constellation,
) -> DetectionResult {
    let symbols: Vec<usize> = estimates.map(|z| alphabet.nearest(z)).collect();
    DetectionResult {
        order: (0..symbols.len()).collect(),
        symbols,
        fused: Vec::new(),
        certainties: Vec::new(),
    }
}

/// Matched filter per user followed by a nearest-point decision. A zero
/// column yields a zero estimate.
pub fn central_mrc(y: &CVector, h: &CMatrix, alphabet: &Constellation) -> DetectionResult {
    linear_result(
        h.column_iter().map(|col| {
            let e = col.norm_squared();
            if e > 0.0 {
                col.dotc(y) / e
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        alphabet,
    )
}

/// Zero forcing over the whole array followed by nearest-point decisions.
pub fn central_zf(y: &CVector, h: &CMatrix, alphabet: &Constellation) -> Result<DetectionResult> {
    let bank = zero_forcing_filters(h)?;
    let estimates = &bank.filters * y;
    Ok(linear_result(estimates.iter().cloned(), alphabet))
}

/// Genie-aided single-user detection: every interferer is removed exactly,
/// leaving `h_k x_k + n`, which is then matched-filtered.
pub fn matched_filter_bound(
    h: &CMatrix,
    symbols: &[usize],
    noise: &CVector,
    alphabet: &Constellation,
) -> Result<DetectionResult> {
    if symbols.len() != h.ncols() || noise.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "{} symbols and noise of length {} for a {}x{} channel",
            symbols.len(),
            noise.len(),
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(linear_result(
        h.column_iter().zip(symbols).map(|(col, &s)| {
            let e = col.norm_squared();
            if e > 0.0 {
                let genie = col * alphabet.point(s) + noise;
                col.dotc(&genie) / e
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        alphabet,
    ))
}

/// Placeholder for the distributed expectation propagation benchmark, which
/// this crate does not implement.
pub fn expectation_propagation(_y: &CVector, _h: &CMatrix) -> Result<DetectionResult> {
    Err(Error::NotImplemented("expectation propagation benchmark"))
}
