//! File formats, run configuration and the `polqpd` command line on top of
//! `polqpd-core`.

// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use config::{Command, RunConfig};
pub use error::{CliError, Result};

/// Resolves the configuration, runs the command and writes every output.
/// Returns the written paths.
pub fn execute(command: Command, flags: cli::Flags) -> Result<Vec<std::path::PathBuf>> {
    let cfg = flags.resolve(command)?;
    let outputs = commands::run(command, &cfg)?;
    let mut written = Vec::with_capacity(outputs.len());
    for o in &outputs {
        o.write()?;
        written.push(o.path.clone());
    }
    Ok(written)
}
