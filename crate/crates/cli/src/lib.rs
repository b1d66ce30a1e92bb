//! Command-line front end: controller files, constraint queries, simulation.

pub mod checkfile;
pub mod commands;
pub mod controller_file;
pub mod error;
pub mod simulate;

pub use commands::{run, Cli, EXIT_INPUT_ERROR, EXIT_REALIZABLE, EXIT_UNKNOWN, EXIT_UNREALIZABLE};
