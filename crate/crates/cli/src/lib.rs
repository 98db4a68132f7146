//! Batch front-end: configuration, scenarios, verifiers and the commands.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod scenario;
pub mod verify;
