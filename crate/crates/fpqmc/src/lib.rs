//! Std companion of `fpqmc-core`: run manifests, parallel repetitions,
//! reference files and CSV output.

pub mod config;
pub mod output;
pub mod runner;

pub use fpqmc_core as core;
