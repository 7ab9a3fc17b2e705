//! Command-line drivers (`rcs`, `map`, `fit`, `oracle`, `serve`) and the JSON
//! API used by the interactive planner.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod payload;
pub mod server;
