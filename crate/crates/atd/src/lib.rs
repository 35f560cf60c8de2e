//! File formats, reports and the `atd` command-line tool on top of
//! [`atd_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod report;

pub use error::{Error, Result};
