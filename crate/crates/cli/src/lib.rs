//! File formats, experiment orchestration and the `mvsdg` command-line
//! interface on top of `mvsdg-core`.

pub mod error;
pub mod formats;
pub mod runconfig;
pub mod runner;

pub use error::{CliError, CliResult};
