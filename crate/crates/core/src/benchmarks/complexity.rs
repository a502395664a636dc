use serde::Serialize;

use crate::error::{Error, Result};

/// Receivers with a closed-form multiplication count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityMethod {
    Zf,
    Mrc,
    /// One LPU running VMP with MRC initialisation.
    VmpLpu,
    /// SIC-VMP fusing every sub-array.
    SicVmp,
    /// SIC-VMP restricted to `b_max` of `B` sub-arrays (NOP or HYB fusion).
    SicVmpBudget,
    /// SIC-VMP with power-based fusion at energy ratio `p0`.
    SicVmpPower,
}

impl ComplexityMethod {
    pub const ALL: [ComplexityMethod; 6] = [
        ComplexityMethod::Mrc,
        ComplexityMethod::Zf,
        ComplexityMethod::VmpLpu,
        ComplexityMethod::SicVmp,
        ComplexityMethod::SicVmpBudget,
        ComplexityMethod::SicVmpPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComplexityMethod::Zf => "zf",
            ComplexityMethod::Mrc => "mrc",
            ComplexityMethod::VmpLpu => "vmp-lpu",
            ComplexityMethod::SicVmp => "sic-vmp",
            ComplexityMethod::SicVmpBudget => "sic-vmp-budget",
            ComplexityMethod::SicVmpPower => "sic-vmp-power",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub method: ComplexityMethod,
    pub m: usize,
    pub k: usize,
    pub b: usize,
    pub m_b: usize,
    pub alphabet: usize,
    pub b_max: usize,
    /// Closed-form count. For the restricted SIC-VMP variants only the LPU
    /// part of the count is scaled.
    pub multiplications: f64,
    /// Rough figure obtained by scaling the whole SIC-VMP count by
    /// `b_max / B` or `p0`; equals `multiplications` for other methods.
    pub approximate: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn complexity(
    method: ComplexityMethod,
    m: usize,
    k: usize,
    b: usize,
    alphabet: usize,
    b_max: usize,
    p0: f64,
    iterations: usize,
) -> Result<ComplexityReport> {
    if m == 0 || k == 0 || b == 0 || !m.is_multiple_of(b) {
        return Err(Error::Parameter(format!(
            "need positive M, K, B with B dividing M (M={m}, K={k}, B={b})"
        )));
    }
    if b_max == 0 || b_max > b {
        return Err(Error::Parameter(format!(
            "b_max must lie in 1..={b}, got {b_max}"
        )));
    }
    let m_b = m / b;
    let (mf, kf, bf, mbf, af) = (m as f64, k as f64, b as f64, m_b as f64, alphabet as f64);
    let half_k2 = kf * kf / 2.0;
    let lpu = half_k2 * bf * (5.0 * mbf + af + 2.0);
    let cpu = half_k2 + mf * kf;
    let (multiplications, approximate) = match method {
        ComplexityMethod::Zf => {
            let c = kf.powi(3) / 3.0 + mf * kf * kf + mf * kf;
            (c, c)
        }
        ComplexityMethod::Mrc => {
            let c = 3.0 * mf * kf;
            (c, c)
        }
        ComplexityMethod::VmpLpu => {
            let i = iterations as f64;
            let c = i * (kf * (2.0 + 2.0 * mbf + af) + 2.0 * mbf) + 3.0 * mbf * kf;
            (c, c)
        }
        ComplexityMethod::SicVmp => (lpu + cpu, lpu + cpu),
        ComplexityMethod::SicVmpBudget => {
            let r = b_max as f64 / bf;
            (lpu * r + cpu, (lpu + cpu) * r)
        }
        ComplexityMethod::SicVmpPower => (lpu * p0 + cpu, (lpu + cpu) * p0),
    };
    Ok(ComplexityReport {
        method,
        m,
        k,
        b,
        m_b,
        alphabet,
        b_max,
        multiplications,
        approximate,
    })
}
