//! Command-line driver for the corner-crest wave solver: configuration,
//! solution archives, CSV/SVG exports and the `solve`, `verify`, `profile`
//! and `scan` subcommands.

pub mod archive;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;

pub use archive::SolutionArchive;
pub use config::RunConfig;
pub use error::{CliError, ExitStatus};
