//! Library half of the `lseries` command-line driver: the verification
//! campaign (case catalog, parallel runner, report types), the config-file
//! parser, coefficient/curve file ingestion, and the tree exporters.
//!
//! Everything here is deterministic: randomized cases draw their parameters
//! up front from a seeded stream, execution is pure per case, and report
//! assembly is single-threaded in catalog order, so one seed and one config
//! always produce the same bytes.

pub mod cases;
pub mod config;
pub mod ingest;
pub mod render;
pub mod report;

/// Schema tag stamped on every JSON document the driver emits.
pub const SCHEMA: u32 = 1;
