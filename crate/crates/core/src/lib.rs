//! Distributed receivers for extra-large-scale MIMO uplinks.
//!
//! The crate is organised the way the receiver is: a channel generator for
//! spatially non-stationary double-scattering channels ([`channel`]), local
//! processing units running variational message passing per sub-array
//! ([`lpu`]), a central unit that fuses their beliefs and runs successive
//! interference cancellation ([`fusion`]), linear reference receivers and
//! closed-form complexity counts ([`benchmarks`]), and a Monte Carlo symbol
//! error rate driver ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod channel;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod lpu;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, SimRng};

pub use num_complex::Complex64;
