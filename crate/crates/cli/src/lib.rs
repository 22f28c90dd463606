//! File formats, threading and command dispatch for the `cooproute` tool.
//!
//! The solvers live in [`cooproute_core`]; this crate reads JSON scenario
//! documents, writes CSV tables and run manifests, and runs independent
//! solver jobs on a scoped thread pool sized by `COOPROUTE_THREADS`.

pub mod config;
pub mod csvio;
pub mod exec;
pub mod manifest;
pub mod run;

pub use config::{parse_document, ConfigDoc, ConfigError, Document};
pub use csvio::{emit_csv, format_number, parse_csv, CsvRow, CsvTable};
pub use exec::Threaded;
pub use manifest::{RunManifest, Warning};
