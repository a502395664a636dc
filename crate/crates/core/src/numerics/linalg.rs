use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{CMatrix, CRowVector, CVector, SimRng};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// `rows × cols` matrix of i.i.d. CN(0, `variance`) entries, drawn row by row.
pub fn sample_cgauss(rng: &mut SimRng, rows: usize, cols: usize, variance: f64) -> Result<CMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Parameter(format!(
            "variance must be a finite non-negative number, got {variance}"
        )));
    }
    let mut out = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out[(r, c)] = rng.cgauss(variance);
        }
    }
    Ok(out)
}

pub fn sample_cgauss_vector(rng: &mut SimRng, len: usize, variance: f64) -> Result<CVector> {
    let m = sample_cgauss(rng, len, 1, variance)?;
    Ok(m.column(0).into_owned())
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues that are negative only through roundoff (above
/// `-1e-10 * max_eigenvalue`) are clamped to zero.
pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "square root of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.norm();
    if scale == 0.0 {
        return Ok(a.clone());
    }
    let asymmetry = (a - a.adjoint()).norm() / scale;
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let hermitian = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(hermitian);
    let max_ev = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let min_ev = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_ev < -PSD_TOL * max_ev.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: min_ev,
            max_eigenvalue: max_ev,
        });
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        let s = ev.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    let b = &scaled * v.adjoint();
    Ok((&b + b.adjoint()).scale(0.5))
}

/// Ratio of largest to smallest singular value; infinite when the matrix has
/// more columns than rows or a zero singular value.
pub fn condition_number(a: &CMatrix) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    if a.ncols() > a.nrows() {
        return f64::INFINITY;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_rank(a: &CMatrix) -> Result<()> {
    let condition = condition_number(a);
    if !(condition * RANK_TOL < 1.0) {
        return Err(Error::SingularChannel { condition });
    }
    Ok(())
}

/// Zero-forcing receive filter for one user.
#[derive(Clone, Debug)]
pub struct ProjectedZf {
    /// `h_k^H P⊥ / (h_k^H P⊥ h_k)` as a `1 × M` row.
    pub filter: CRowVector,
    /// `h_k^H P⊥ h_k`, the energy of `h_k` outside the interferers' span.
    pub gain: f64,
}

/// ZF filter for column `k` of `h`, built by projecting `h_k` onto the
/// orthogonal complement of the remaining columns through a thin QR of the
/// interferer matrix.
pub fn solve_projected_zf(h: &CMatrix, k: usize) -> Result<ProjectedZf> {
    let (m, users) = h.shape();
    if k >= users {
        return Err(Error::Dimension(format!(
            "user {k} out of range for {users} columns"
        )));
    }
    let target = h.column(k).into_owned();
    let projected: CVector = if users == 1 {
        target.clone()
    } else {
        let interferers = h.clone().remove_column(k);
        check_rank(&interferers)?;
        if interferers.ncols() >= m {
            return Err(Error::SingularChannel {
                condition: f64::INFINITY,
            });
        }
        let q = interferers.qr().q();
        &target - &q * (q.adjoint() * &target)
    };
    let energy = target.norm_squared();
    let gain = projected.norm_squared();
    if energy == 0.0 || gain <= RANK_TOL * RANK_TOL * energy {
        let condition = if gain > 0.0 {
            (energy / gain).sqrt()
        } else {
            f64::INFINITY
        };
        return Err(Error::SingularChannel { condition });
    }
    Ok(ProjectedZf {
        filter: projected.adjoint().unscale(gain),
        gain,
    })
}

/// ZF filters for every user at once.
#[derive(Clone, Debug)]
pub struct ZfBank {
    /// `K × M`; row `k` is the ZF filter of user `k`.
    pub filters: CMatrix,
    pub gains: Vec<f64>,
}

/// All ZF filters from a single thin QR `H = QR`: the filter bank is
/// `R⁻¹Qᴴ` and user `k`'s gain is `1 / ‖row_k(R⁻¹)‖²`.
pub fn zero_forcing_filters(h: &CMatrix) -> Result<ZfBank> {
    let (m, users) = h.shape();
    if users == 0 {
        return Err(Error::Dimension("channel has no columns".into()));
    }
    if users > m {
        return Err(Error::SingularChannel {
            condition: f64::INFINITY,
        });
    }
    check_rank(h)?;
    let qr = h.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let identity = DMatrix::<Complex64>::identity(users, users);
    let r_inv = r
        .solve_upper_triangular(&identity)
        .ok_or(Error::SingularChannel {
            condition: f64::INFINITY,
        })?;
    let filters = &r_inv * q.adjoint();
    let gains = (0..users)
        .map(|k| 1.0 / r_inv.row(k).norm_squared())
        .collect();
    Ok(ZfBank { filters, gains })
}
