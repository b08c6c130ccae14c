//! Command line front end for `disconj-core`: JSON problem files, JSON run
//! reports and CSV grids.

pub mod cli;
pub mod commands;
pub mod error;
pub mod problem;
pub mod report;

pub use commands::{run, Outcome};
pub use error::{exit, CliError};
pub use problem::{Loaded, ProblemFile};
