//! File-based front end to `volrisk-core`: CSV and HTTP price ingestion,
//! TOML run configs, JSON/CSV tables, and the commands of the `volrisk`
//! binary.

pub mod config;
pub mod ingest;
pub mod output;
pub mod pipeline;
