//! Reference receivers and closed-form complexity counts.

mod complexity;
mod receivers;

pub use complexity::{complexity, ComplexityMethod, ComplexityReport};
pub use receivers::{central_mrc, central_zf, expectation_propagation, matched_filter_bound};
