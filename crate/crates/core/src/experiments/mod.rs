//! Experiment drivers shared by the command line and the test suites:
//! codec scalability benchmarks, the 2-D activation comparisons, and the
//! MNIST reduction / pruning pipelines.

mod activation;
mod bench;
mod dimred;
mod report;

pub use activation::{run_activation_experiment, ActivationConfig, ActivationOutcome, DecisionGrid};
pub use bench::{bench_scalability, BenchConfig, BenchMethod, BenchRecord, BenchReport, ParallelRecord, BENCH_COLUMNS};
pub use dimred::{
    default_data_dir, run_dimred_experiment, run_prune_experiment, DimredConfig, DimredMethod, DimredOutcome,
    PruneOutcome, DATA_DIR_ENV,
};
pub use report::{is_timing_key, strip_timings, Environment, ExperimentReport, OutputFormat};

use std::path::PathBuf;

use thiserror::Error;

use crate::activations::ActivationError;
use crate::datasets::DataError;
use crate::dimred::DimredError;
use crate::gapcode::GapError;
use crate::graphcore::GraphError;
use crate::network::NetworkError;
use crate::partition::PartitionError;
use crate::pruning::PruneError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("{}: unsupported output extension (use .csv or .json)", path.display())]
    UnsupportedFormat { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Dimred(#[from] DimredError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Gap(#[from] GapError),
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
