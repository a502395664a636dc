use num_complex::Complex64;

use super::Constellation;
use crate::error::{Error, Result};

/// Probability mass over the constellation, indexed in constellation order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPmf {
    weights: Vec<f64>,
}

/// Complex Gaussian message `CN(mu, var)` restricted to the alphabet later on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianMessage {
    pub mu: Complex64,
    pub var: f64,
}

impl SymbolPmf {
    pub fn uniform(size: usize) -> Self {
        SymbolPmf {
            weights: vec![1.0 / size as f64; size],
        }
    }

    pub fn delta(size: usize, index: usize) -> Self {
        let mut weights = vec![0.0; size];
        weights[index] = 1.0;
        SymbolPmf { weights }
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(format!("invalid pmf weights {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Parameter("pmf weights sum to zero".into()));
        }
        Ok(SymbolPmf {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Normalises `exp(log_weights)` after subtracting the maximum. Returns
    /// `None` when every entry is `-inf` (no support at all).
    pub fn from_log_weights(log_weights: &[f64]) -> Option<Self> {
        let max = log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max.is_nan() {
            return None;
        }
        let mut weights: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Some(SymbolPmf { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Single point of support.
    pub fn is_delta(&self) -> bool {
        self.weights.iter().filter(|w| **w > 0.0).count() == 1
    }

    /// Most probable index; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// Ratio of the largest to the second largest weight, `+inf` when the
    /// second largest is zero.
    pub fn lr_certainty(&self) -> f64 {
        let mut first = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for &w in &self.weights {
            if w > first {
                second = first;
                first = w;
            } else if w > second {
                second = w;
            }
        }
        if second <= 0.0 {
            f64::INFINITY
        } else {
            first / second
        }
    }
}

/// Mean and variance of the symbol under `q`.
pub fn pmf_moments(q: &SymbolPmf, alphabet: &Constellation) -> (Complex64, f64) {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (w, a) in q.weights.iter().zip(alphabet.points()) {
        mean += a * *w;
        second += a.norm_sqr() * w;
    }
    (mean, (second - mean.norm_sqr()).max(0.0))
}

/// `q(a) ∝ exp(-|a - mu|² / var)` over the alphabet.
pub fn gaussian_to_pmf(mu: Complex64, var: f64, alphabet: &Constellation) -> Result<SymbolPmf> {
    if !(var > 0.0) {
        return Err(Error::Parameter(format!(
            "message variance must be positive, got {var}"
        )));
    }
    let logs: Vec<f64> = alphabet
        .points()
        .iter()
        .map(|a| -(a - mu).norm_sqr() / var)
        .collect();
    SymbolPmf::from_log_weights(&logs)
        .ok_or_else(|| Error::Parameter(format!("non-finite message mean {mu}")))
}

/// Local marginal: Gaussian message times the local prior, in the log domain.
pub fn local_marginal(
    msg: GaussianMessage,
    prior: &SymbolPmf,
    alphabet: &Constellation,
) -> Result<SymbolPmf> {
    if !(msg.var > 0.0) {
        return Err(Error::Parameter(format!(
            "message variance must be positive, got {}",
            msg.var
        )));
    }
    let logs: Vec<f64> = alphabet
        .points()
        .iter()
        .zip(prior.weights())
        .map(|(a, p)| -(a - msg.mu).norm_sqr() / msg.var + p.ln())
        .collect();
    SymbolPmf::from_log_weights(&logs)
        .ok_or_else(|| Error::Parameter("local marginal has no support".into()))
}
