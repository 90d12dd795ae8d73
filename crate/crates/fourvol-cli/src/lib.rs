//! Configuration, tick ingestion and pipeline orchestration behind the
//! `fourvol` command-line tool.

// `!(x > 0.0)` guards are deliberate: they also reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pipeline;
pub mod ticks;

pub use config::{Mode, NRule, RunConfig};
pub use pipeline::{estimate_dataset, run_estimation, run_montecarlo, simulate_dataset};
