use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CMatrix;

/// Which sub-arrays contribute to each user's fused belief.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// Every sub-array.
    #[default]
    All,
    /// Strongest sub-arrays per user until a fraction `p0` of its energy is covered.
    Pwr,
    /// The `b_max` sub-arrays with the largest noise precision, for every user.
    Nop,
    /// Per user, the `b_max` largest entries of `λ̄_b · ‖h̃_{b,k}‖²`.
    Hyb,
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(FusionMode::All),
            "pwr" => Ok(FusionMode::Pwr),
            "nop" => Ok(FusionMode::Nop),
            "hyb" => Ok(FusionMode::Hyb),
            other => Err(Error::Config(format!("unknown fusion mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub mode: FusionMode,
    pub p0: f64,
    pub b_max: usize,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            mode: FusionMode::All,
            p0: 0.75,
            b_max: 3,
        }
    }
}

/// Binary `B × K` selection matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionMatrix {
    pub mode: FusionMode,
    selected: DMatrix<bool>,
}

impl FusionMatrix {
    pub fn all(subarrays: usize, users: usize) -> Self {
        FusionMatrix {
            mode: FusionMode::All,
            selected: DMatrix::from_element(subarrays, users, true),
        }
    }

    pub fn subarrays(&self) -> usize {
        self.selected.nrows()
    }

    pub fn users(&self) -> usize {
        self.selected.ncols()
    }

    pub fn get(&self, b: usize, k: usize) -> bool {
        self.selected[(b, k)]
    }

    /// Sub-arrays fused for user `k`, ascending.
    pub fn contributors(&self, k: usize) -> Vec<usize> {
        (0..self.subarrays())
            .filter(|&b| self.selected[(b, k)])
            .collect()
    }

    pub fn is_all_ones(&self) -> bool {
        self.selected.iter().all(|v| *v)
    }
}

/// `Γ = diag(λ) P` with `P[b,k] = ‖h̃_{b,k}‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridMeasure {
    pub gamma: DMatrix<f64>,
    pub energies: DMatrix<f64>,
    pub lambda: Vec<f64>,
}

impl HybridMeasure {
    pub fn new(energies: DMatrix<f64>, lambda: &[f64]) -> Result<Self> {
        if lambda.len() != energies.nrows() {
            return Err(Error::Dimension(format!(
                "{} precisions for {} sub-arrays",
                lambda.len(),
                energies.nrows()
            )));
        }
        let mut gamma = energies.clone();
        for (b, mut row) in gamma.row_iter_mut().enumerate() {
            row *= lambda[b];
        }
        Ok(HybridMeasure {
            gamma,
            energies,
            lambda: lambda.to_vec(),
        })
    }
}

/// `B × K` matrix of per-sub-array user energies `‖h̃_{b,k}‖²`.
pub fn subarray_energies(h: &CMatrix, subarrays: usize) -> DMatrix<f64> {
    let per_block = h.nrows() / subarrays;
    DMatrix::from_fn(subarrays, h.ncols(), |b, k| {
        h.view((b * per_block, k), (per_block, 1)).norm_squared()
    })
}

/// Indices sorted by decreasing score; equal scores keep ascending index.
fn ranked(scores: impl Iterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Builds `V` for the requested mode. `energies` is the `B × K` output of
/// [`subarray_energies`]; `lambda` holds `λ̄_b` per sub-array and is only read
/// by NOP and HYB.
pub fn build_fusion_matrix(
    params: &FusionParams,
    energies: &DMatrix<f64>,
    lambda: &[f64],
) -> Result<FusionMatrix> {
    let (subarrays, users) = energies.shape();
    if subarrays == 0 {
        return Err(Error::Config("no sub-arrays to fuse".into()));
    }
    let mut selected = DMatrix::from_element(subarrays, users, false);
    match params.mode {
        FusionMode::All => selected.fill(true),
        FusionMode::Pwr => {
            if !(params.p0 > 0.0 && params.p0 <= 1.0) {
                return Err(Error::Config(format!(
                    "p0 must lie in (0, 1], got {}",
                    params.p0
                )));
            }
            for k in 0..users {
                let column = energies.column(k);
                let total: f64 = column.sum();
                if total <= 0.0 {
                    log::warn!("user {k} has no energy on any sub-array, fusing all");
                    selected.column_mut(k).fill(true);
                    continue;
                }
                let mut covered = 0.0;
                for b in ranked(column.iter().cloned()) {
                    if covered > params.p0 * total {
                        break;
                    }
                    covered += column[b];
                    selected[(b, k)] = true;
                }
            }
        }
        FusionMode::Nop | FusionMode::Hyb => {
            if params.b_max == 0 || params.b_max > subarrays {
                return Err(Error::Config(format!(
                    "b_max must lie in 1..={subarrays}, got {}",
                    params.b_max
                )));
            }
            if lambda.len() != subarrays {
                return Err(Error::Dimension(format!(
                    "{} precisions for {subarrays} sub-arrays",
                    lambda.len()
                )));
            }
            if params.mode == FusionMode::Nop {
                for b in ranked(lambda.iter().cloned())
                    .into_iter()
                    .take(params.b_max)
                {
                    selected.row_mut(b).fill(true);
                }
            } else {
                let measure = HybridMeasure::new(energies.clone(), lambda)?;
                for k in 0..users {
                    for b in ranked(measure.gamma.column(k).iter().cloned())
                        .into_iter()
                        .take(params.b_max)
                    {
                        selected[(b, k)] = true;
                    }
                }
            }
        }
    }
    Ok(FusionMatrix {
        mode: params.mode,
        selected,
    })
}
