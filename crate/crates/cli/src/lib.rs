//! Batch front-end for `jumpform`: a JSON config in, a JSON or CSV report out.
//!
//! Exit codes: 0 all pass, 2 a failure or per-request error, 3 inconclusive,
//! 4 config error, 1 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod validate;

pub use config::{Op, PointSet, Request, RunConfig};
pub use error::CliError;
pub use report::{RequestResult, RunReport, Status, Summary};
pub use run::{config_digest, run};
pub use validate::{validate, validate_file, validate_text, Diagnostic};
