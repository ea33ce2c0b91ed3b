//! Input, output and the command-line front end.

pub mod commands;
pub mod config;
pub mod data;
pub mod report;

pub use commands::{run, Format, EXIT_DATA, EXIT_FIT, EXIT_OK, EXIT_USAGE, THREADS_ENV};
pub use config::{parse_bandwidth, parse_starts, StudyPlan};
pub use data::{load_csv, parse_csv, ColumnMapping};
pub use report::{format_sig, FitPayload, Payload, RunReport, SimulatePayload};
