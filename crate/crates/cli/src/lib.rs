//! Command-line front end for the two-qutrit dephasing library: scenario
//! files, validation suites, random-state sweeps, and CSV/JSON output.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use error::CliError;
