//! Fokker-Planck particle simulation of rarefied monoatomic gases with
//! interchangeable noise-sampling strategies, including Array-RQMC.
//!
//! The crate is `no_std` (it needs `alloc`): every routine here is a pure
//! computation over caller-owned data. Parallel orchestration, file formats
//! and the command line live in the `fpqmc` companion crate.
#![no_std]
// NaN-rejecting `!(x > 0.0)` checks and index loops over vector components are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod dynamics;
pub mod ensemble;
pub mod order;
pub mod rng;
pub mod sampling;
pub mod scenario;
pub mod stats;

pub use error::Error;

/// Cartesian 3-vector.
pub type Vec3 = [f64; 3];
