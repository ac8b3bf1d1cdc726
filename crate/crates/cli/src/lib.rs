//! Experiment runner: JSON configs in, CSV result tables out.
//!
//! [`load_config`] parses and validates a config, [`run::run`] executes it
//! and [`sweep::sweep`] repeats it along one parameter axis. Tables are
//! written by [`write_table`].

pub mod config;
pub mod error;
pub mod run;
pub mod sweep;
pub mod table;

use std::path::Path;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use run::run;
pub use sweep::sweep;
pub use table::{ResultTable, Row};

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| error::io_error(path, e))?;
    ExperimentConfig::from_json(&text)
}

/// Writes the CSV to `out`, or to stdout when `out` is `None`.
pub fn write_table(table: &ResultTable, out: Option<&Path>) -> Result<(), CliError> {
    let csv = table.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| error::io_error(path, e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(csv.as_bytes())
                .map_err(|e| error::io_error("stdout", e))
        }
    }
}
