//! Central-unit processing: sub-array data fusion, hard decisions and the
//! SIC detector that alternates LPU passes with interference cancellation.

mod detect;
mod matrix;

pub use detect::{
    detect_noniterative, fuse_marginals, hard_detect, lr_certainty, sic_detect, DetectionResult,
    ReceiverConfig, SicDetector, SicOrdering,
};
pub use matrix::{
    build_fusion_matrix, subarray_energies, FusionMatrix, FusionMode, FusionParams, HybridMeasure,
};
