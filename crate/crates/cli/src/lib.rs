//! Command-line front end: analyze a p-value table, run a simulation study,
//! solve for the oracle threshold, or tabulate curves.

pub mod commands;
pub mod io;

pub use commands::{run, Cli};
