//! Library side of the `sdr` command-line tool.

pub mod app;
pub mod ingest;
pub mod structure;
