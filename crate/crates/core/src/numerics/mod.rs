//! Seeded sampling and the handful of complex linear-algebra kernels the
//! receivers need.

mod linalg;
mod rng;

pub use linalg::{
    condition_number, hermitian_sqrt, sample_cgauss, sample_cgauss_vector, solve_projected_zf,
    zero_forcing_filters, ProjectedZf, ZfBank,
};
pub use rng::SimRng;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

/// Dense complex matrix. Indexing is `(row, col)`.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;
/// Dense complex row vector (receive filters).
pub type CRowVector = RowDVector<Complex64>;
