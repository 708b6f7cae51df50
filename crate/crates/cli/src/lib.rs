//! Config-driven runner: TOML run descriptions in, CSV/`.dat` artifacts and a
//! digest manifest out.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod verify;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use runner::{execute, Check, RunOptions, RunOutcome};
