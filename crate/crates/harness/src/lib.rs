//! Experiment harness: dataset ingestion, streaming clustering and
//! classification loops, adaptivity transforms, sweeps and CSV metrics.

pub mod adaptivity;
pub mod config;
pub mod digits;
pub mod error;
pub mod idx;
pub mod metrics;
pub mod runner;
pub mod sweep;
pub mod waveform;

pub use config::{ExperimentConfig, Mode, Schedule, Transform};
pub use error::{HarnessError, Result};
pub use metrics::MetricsSeries;
pub use runner::{run, run_classification, run_clustering, write_outputs, RunOutput};
