//! Reproducible experiments: configuration, sweeps, plotting and the
//! bodies of the command-line subcommands.

pub mod commands;
pub mod config;
pub mod plot;
pub mod sweep;

pub use config::ExperimentConfig;
