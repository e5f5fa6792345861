//! Command-line tool and Monte Carlo harness built on `clustersize-core`:
//! series files, experiment configs, CSV/SVG summaries and the
//! `clustersize` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod series;

pub use config::{EstimatorId, ExperimentConfig, Truth};
pub use error::{AppError, Result};
pub use experiments::{run, Metric, SummaryRow, SummaryTable};
