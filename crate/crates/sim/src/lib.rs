//! Discrete-event simulation of UAVs reporting through fog aggregators to a
//! cloud cluster that commits their data to a shared ledger.

pub mod cloud;
pub mod config;
pub mod error;
pub mod message;
pub mod metrics;
pub mod run;
pub mod trace;
pub mod world;

pub use cloud::{BlockCommit, Cloud, Quarantine};
pub use config::{SimConfig, TimingMode};
pub use error::{Error, Result};
pub use metrics::{CostModel, Metrics, Stage, METRICS_HEADER};
pub use run::{run, run_with, AcceptedTx, Counters, SimOutcome};
pub use trace::{SimTrace, TraceEvent};
