//! Command pipeline for entanglement-depth certification experiments:
//! dataset simulation, training, hierarchy certification, interpretation
//! and partition counting, driven by one TOML configuration file.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_certify, cmd_gen_data, cmd_interpret, cmd_partitions, cmd_train};
pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
