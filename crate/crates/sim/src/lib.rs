//! Experiment harness: TOML configuration, parameter sweeps run in
//! parallel over seeded trials, and CSV and binary outputs.

pub mod cli;
pub mod config;
pub mod dump;
pub mod error;
pub mod output;
pub mod sweep;

pub use error::HarnessError;
