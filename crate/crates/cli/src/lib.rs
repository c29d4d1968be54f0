//! Command line front end for `mlab`: scenario files in, JSON and CSV out.
//!
//! Exit codes: 0 success, 2 invalid input, 3 analysis failure, 4 bound
//! violation found by `verify`. Failures print a JSON object
//! `{"error": {...}, "exit_code": n}` on standard error.

#![allow(clippy::result_large_err)]

pub mod commands;
pub mod error;
pub mod run;
pub mod scenario;
pub mod sweep;
pub mod wire;

pub use error::CliError;
