//! Command-line front end for the `wmark` crate.

pub mod commands;
pub mod sidecar;

pub use commands::{configure_threads, run, Cli, Outcome};
pub use sidecar::Sidecar;
