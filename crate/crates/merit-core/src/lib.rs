//! Core data model and analytics for benchmark orchestration and
//! procurement evaluation.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that does not
//! touch the filesystem, the network, or a clock: the declarative benchmark
//! schema and its validation, parameter-space expansion, step planning,
//! template rendering, figure-of-merit extraction and normalization,
//! verification semantics, strong/weak scaling analytics, the procurement
//! value-for-money arithmetic, regression baselines, and the analytic models
//! behind the bundled synthetic workloads.
//!
//! The companion `merit` crate layers the concrete file formats, execution
//! backends, persistent store, and CLI on top.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod expand;
pub mod metrics;
pub mod plan;
pub mod procurement;
pub mod regression;
pub mod run;
pub mod scaling;
pub mod spec;
pub mod template;
pub mod workload;

mod util;

#[cfg(test)]
pub(crate) mod testutil;

pub use util::{fnv1a, format_float, mix_seed};
