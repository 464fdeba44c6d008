//! Benchmark orchestration harness: file formats, execution backends, the
//! persistent result store, scaling/procurement reports, and the `merit`
//! command-line interface.
//!
//! The pure data model and analytics live in `merit-core`; this crate adds
//! everything that touches the filesystem, processes, sockets, or a clock.

pub mod analyze;
pub mod backend;
pub mod cli;
pub mod config;
pub mod engine;
pub mod report;
pub mod schema_doc;
pub mod store;
pub mod workloads;
