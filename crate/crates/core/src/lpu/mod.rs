//! Local processing units: the per-sub-array variational message passing
//! engine and the initialisation schemes that seed it.
//!
//! Each LPU sees only its slice `y_b = H̃_b x + n_b` of the received signal and
//! keeps a mean-field posterior made of one discrete marginal per user plus a
//! Gamma posterior on its noise precision.

mod constellation;
mod init;
mod pmf;
mod vmp;

pub use constellation::{Constellation, ConstellationKind};
pub use init::{
    init_mrc, init_uniform, init_zf, initialize, mrc_from_gram, subarray_view, InitMethod,
    InitStrategy,
};
pub use pmf::{gaussian_to_pmf, local_marginal, pmf_moments, GaussianMessage, SymbolPmf};
pub use vmp::{
    residual_zb, run_local_vmp, symbol_message, update_precision, LpuState, NoisePrecision,
    SweepSchedule,
};
