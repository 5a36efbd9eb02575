//! Command-line harness around `cbfl-core`: `key=value` configuration files,
//! samples files, deterministic CSV output and the subcommand logic.

// `!(x < y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod csv_out;
pub mod data;

pub use commands::CliError;
