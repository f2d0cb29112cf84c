//! Library side of the `odfc` command-line tool: argument types, command
//! dispatch and the file formats it writes.

pub mod commands;
pub mod output;

pub use commands::{run, Cli, CliError, Command};
pub use output::{emit_trajectory, parse_trajectory_csv, Format, TrajectoryRow};
