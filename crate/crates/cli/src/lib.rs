//! Verification, benchmarking and one-shot runs on top of `fastcv`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod error;
pub mod run;
pub mod verify;

pub use error::{CliError, CliResult};
