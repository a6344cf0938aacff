//! `geonet`: graph generation, gap encoding, scalability benchmarks and the
//! activation / reduction / pruning experiments.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for runtime failures.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geonet_core::activations::ActivationSpec;
use geonet_core::datasets::SyntheticKind;
use geonet_core::experiments::{default_data_dir, DimredMethod, OutputFormat};
use geonet_core::partition::PartitionStrategy;

#[derive(Debug, Parser)]
#[command(name = "geonet", version, about = "Non-linear activations, reduction, pruning and gap-encoded graphs")]
#[command(arg_required_else_help = true, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random graph and write it as an edge list.
    GenGraph(GenGraphArgs),
    /// Gap-encode an edge list to the binary format, or decode one back.
    Encode(EncodeArgs),
    /// Encode ER graphs of several sizes and report time, bytes and inter-cluster edges.
    Bench(BenchArgs),
    /// Train a reference classifier on a 2-D synthetic dataset.
    Train(TrainArgs),
    /// Reduce MNIST features (PCA, autoencoder) or prune, then train and evaluate.
    Dimred(DimredArgs),
    /// Magnitude-prune an MNIST classifier, fine-tune it and profile layer sensitivity.
    Prune(PruneArgs),
    /// Clustering coefficient and average path length of an edge list.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Er,
    Ws,
    Ba,
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0, 1]"))
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("{s:?} is not a positive integer")),
    }
}

/// Report paths must end in `.csv` or `.json`.
fn report_path(s: &str) -> Result<PathBuf, String> {
    let path = PathBuf::from(s);
    OutputFormat::from_path(&path).map_err(|e| e.to_string())?;
    Ok(path)
}

#[derive(Debug, Args)]
struct GenGraphArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, value_parser = positive)]
    n: usize,
    /// Edge probability (er).
    #[arg(long, value_parser = probability)]
    p: Option<f64>,
    /// Ring neighbours, even (ws).
    #[arg(long)]
    k: Option<usize>,
    /// Rewiring probability (ws).
    #[arg(long, value_parser = probability)]
    beta: Option<f64>,
    /// Edges per new node (ba).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["graph", "decode"]))]
struct EncodeArgs {
    /// Edge list to encode.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Encoded file to decode back into an edge list.
    #[arg(long)]
    decode: Option<PathBuf>,
    #[arg(long, default_value = "louvain", conflicts_with = "decode")]
    partition: PartitionStrategy,
    #[arg(long, default_value_t = 1, value_parser = positive, conflicts_with = "decode")]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// Shuffle Louvain sweeps with this seed instead of sweeping in node order.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_parser = positive, value_delimiter = ',', default_value = "100,500,1000,2000,5000")]
    sizes: Vec<usize>,
    #[arg(long, value_parser = probability, default_value_t = 0.05)]
    p: f64,
    #[arg(long, value_parser = positive, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value = "range:sqrt")]
    partition: PartitionStrategy,
    /// Worker counts for the parallel-encode comparison; `0` skips it.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    workers: Vec<usize>,
    /// Largest n for which the adjacency baseline is materialised.
    #[arg(long, default_value_t = 20_000)]
    adjacency_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `.csv` (fixed column schema) or `.json`; CSV to stdout when omitted.
    #[arg(long, value_parser = report_path)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: SyntheticKind,
    /// `poly:<degree>`, `rbf:<units>`, `lrelu:<alpha>` or `prelu`.
    #[arg(long)]
    activation: ActivationSpec,
    #[arg(long, value_parser = positive, default_value_t = 400)]
    samples: usize,
    /// Per-coordinate noise; each dataset's default when omitted.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_parser = positive, default_value_t = 500)]
    epochs: usize,
    #[arg(long, value_parser = positive, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, value_parser = positive, default_value_t = 200)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decision-boundary grid as `x,y,class` CSV.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Trained network as versioned JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Report; JSON to stdout when omitted.
    #[arg(long, value_parser = report_path)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MnistArgs {
    /// Directory holding the IDX files (optionally gzipped). Defaults to
    /// `$GEONET_DATA_DIR`, then `./data/mnist`.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    train_limit: Option<usize>,
    #[arg(long)]
    test_limit: Option<usize>,
    #[arg(long, value_parser = positive, default_value_t = 128)]
    hidden: usize,
    #[arg(long, value_parser = positive, default_value_t = 5)]
    epochs: usize,
    #[arg(long, value_parser = positive, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report; JSON to stdout when omitted.
    #[arg(long, value_parser = report_path)]
    out: Option<PathBuf>,
}

impl MnistArgs {
    fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(default_data_dir)
    }
}

#[derive(Debug, Args)]
struct DimredArgs {
    /// `baseline`, `pca:<k>`, `ae:<latent>` or `prune:<fraction>`.
    #[arg(long)]
    method: DimredMethod,
    #[arg(long, value_parser = positive, default_value_t = 5)]
    ae_epochs: usize,
    #[arg(long, value_parser = positive, default_value_t = 2)]
    fine_tune_epochs: usize,
    #[command(flatten)]
    mnist: MnistArgs,
}

#[derive(Debug, Args)]
struct PruneArgs {
    #[arg(long, value_parser = probability)]
    fraction: f64,
    #[arg(long, default_value_t = 2)]
    fine_tune_epochs: usize,
    /// Layer sensitivity report (JSON).
    #[arg(long)]
    sensitivity: Option<PathBuf>,
    #[command(flatten)]
    mnist: MnistArgs,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Also report modularity and inter-cluster edges under this strategy.
    #[arg(long)]
    partition: Option<PartitionStrategy>,
    /// Report; JSON to stdout when omitted.
    #[arg(long, value_parser = report_path)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::GenGraph(a) => commands::gen_graph(a),
        Command::Encode(a) => commands::encode(a),
        Command::Bench(a) => commands::bench(a),
        Command::Train(a) => commands::train(a),
        Command::Dimred(a) => commands::dimred(a),
        Command::Prune(a) => commands::prune(a),
        Command::Metrics(a) => commands::metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
