//! Experiment driver for the `nnta` library: dataset generation, solver
//! runs with trace and report output, decompositions on disk, and
//! per-iteration timing benchmarks.

pub mod artifacts;
pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;

pub use config::{DatasetSource, ExperimentConfig, Format, Method, PartialConfig, SvdKind};
pub use error::{CliError, ExitCode};
pub use experiment::{run, RunReport};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "NNTA_OUTPUT_DIR";
