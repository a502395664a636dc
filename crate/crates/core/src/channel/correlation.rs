use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::numerics::CMatrix;

/// Hermitian Toeplitz matrix of size `size` whose entry `(m, l)` is
/// `(1/S) Σ_n exp(-2πj (m-l) d cos(base + n θ/(S-1)))`, `n` running over
/// `(1-S)/2 ..= (S-1)/2`. With `S = 1` the single term has no angular offset.
fn steering_correlation(
    scatterers: usize,
    spacing: f64,
    base: f64,
    spread: f64,
    size: usize,
) -> CMatrix {
    let s = scatterers as f64;
    let angles: Vec<f64> = (0..scatterers)
        .map(|t| {
            let n = t as f64 - (s - 1.0) / 2.0;
            let offset = if scatterers > 1 {
                n * spread / (s - 1.0)
            } else {
                0.0
            };
            (base + offset).cos()
        })
        .collect();
    let lags: Vec<Complex64> = (0..size)
        .map(|lag| {
            let sum: Complex64 = angles
                .iter()
                .map(|c| Complex64::from_polar(1.0, -2.0 * PI * lag as f64 * spacing * c))
                .sum();
            sum / s
        })
        .collect();
    CMatrix::from_fn(size, size, |m, l| {
        if m >= l {
            lags[m - l]
        } else {
            lags[l - m].conj()
        }
    })
}

/// BS-cluster correlation over its `r_i` visible antennas. `spacing` is the
/// antenna spacing in wavelengths.
pub fn bs_correlation(
    scatterers: usize,
    spacing: f64,
    azimuth: f64,
    spread: f64,
    antennas: usize,
) -> CMatrix {
    steering_correlation(scatterers, spacing, FRAC_PI_2 + azimuth, spread, antennas)
}

/// Correlation between a BS-cluster's `S_i` scatterers as seen from a user's
/// U-cluster. `spacing` is the U-cluster virtual spacing in wavelengths.
pub fn u_correlation(scatterers: usize, spacing: f64, azimuth: f64, spread: f64) -> CMatrix {
    steering_correlation(scatterers, spacing, FRAC_PI_2 - azimuth, spread, scatterers)
}
