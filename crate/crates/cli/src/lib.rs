//! Command line front end: experiment configs, execution and output files.

pub mod bundled;
pub mod config;
pub mod output;
pub mod run;

use std::path::Path;

use config::{ConfigError, ExperimentConfig};

/// Loads `arg` as a file path, or as a bundled experiment name when no such
/// file exists.
pub fn load(arg: &str) -> Result<ExperimentConfig, ConfigError> {
    let path = Path::new(arg);
    if path.is_file() {
        return ExperimentConfig::from_path(path);
    }
    match bundled::find(arg) {
        Some(b) => b.parse(),
        None => Err(ConfigError {
            line: None,
            message: format!("'{arg}' is neither a config file nor a bundled experiment (see `nhep list`)"),
        }),
    }
}
