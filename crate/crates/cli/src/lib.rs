//! File front end for the `dagwood` solver: game files, reports and the
//! `solve` and `trace` commands.

#![allow(clippy::result_large_err)]

pub mod commands;
pub mod error;
pub mod game_file;
pub mod report;

pub use commands::{run, Cli};
pub use error::CliError;
pub use game_file::{GameFile, TxRecord};
pub use report::SolutionReport;
