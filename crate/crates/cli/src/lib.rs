//! Scenario-driven front end for `qmeasure`.
//!
//! A run reads a plain-text [`scenario::Scenario`], executes one
//! [`commands::Command`] against the core library and produces a
//! [`report::Report`]: a stable text table whose body is hashed into a
//! digest, followed by wall-clock timings that are kept out of the digest.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{run, Command, Options};
pub use error::{CliError, EXIT_FAIL, EXIT_NONCONVERGENCE, EXIT_PASS, EXIT_USAGE};
pub use report::{Record, Report, Status};
pub use scenario::Scenario;
