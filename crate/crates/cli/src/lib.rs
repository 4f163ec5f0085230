//! Batch front end for the `rsc-core` solvers: configuration loading,
//! subcommands and CSV output.

pub mod commands;
pub mod config;
pub mod format;

pub use commands::{cmd_crosscheck, cmd_propositions, cmd_solve, cmd_sweep, Report};
pub use config::{apply_override, ConfigError, RunConfig, SourceSel};
