//! Experiment harness, file formats and command-line front end for
//! [`dlamap_core`].

pub mod cli;
pub mod experiments;
pub mod formats;
pub mod rng;
pub mod stats;
pub mod verify;

pub use dlamap_core as core_lib;

/// Version stamp written into every output file.
pub const VERSION_STAMP: &str = concat!("dlamap-v", env!("CARGO_PKG_VERSION"));
