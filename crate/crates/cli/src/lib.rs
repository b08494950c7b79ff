//! Command-line tools and the benchmark harness.

pub mod app;
pub mod bench;
pub mod report;
