use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use geonet_core::experiments::{
    bench_scalability, run_activation_experiment, run_dimred_experiment, run_prune_experiment, ActivationConfig,
    BenchConfig, DimredConfig, ExperimentReport, OutputFormat,
};
use geonet_core::gapcode::{adjacency_matrix_bytes, deserialize, encode_parallel, serialize};
use geonet_core::graphcore::{
    average_path_length, clustering_coefficient, gen_ba, gen_er, gen_ws, load_edge_list, save_edge_list, Graph,
    GraphError,
};
use geonet_core::network::TrainConfig;
use geonet_core::numkit::Rng;
use geonet_core::partition::{edge_split, modularity, partition_louvain, Partition, PartitionStrategy};
use serde_json::json;

use crate::{BenchArgs, DimredArgs, EncodeArgs, GenGraphArgs, MetricsArgs, MnistArgs, Model, PruneArgs, TrainArgs};

pub enum Failure {
    /// Arguments that parse but do not fit together.
    Usage(String),
    Runtime(Box<dyn Error>),
}

impl<E: Error + 'static> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(Box::new(e))
    }
}

type Outcome = Result<(), Failure>;

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()).into()))
}

/// Saves `report` to `out`, or prints it as JSON.
fn emit(report: &ExperimentReport, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => report.save(path)?,
        None => io::stdout().write_all(report.to_json()?.as_bytes())?,
    }
    Ok(())
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Er => "er",
        Model::Ws => "ws",
        Model::Ba => "ba",
    }
}

pub fn gen_graph(a: GenGraphArgs) -> Outcome {
    fn need<T>(v: Option<T>, model: Model, flag: &str) -> Result<T, Failure> {
        v.ok_or_else(|| Failure::Usage(format!("--model {} requires {flag}", model_name(model))))
    }
    let mut rng = Rng::seed(a.seed);
    let g = match a.model {
        Model::Er => gen_er(a.n, need(a.p, a.model, "--p")?, &mut rng)?,
        Model::Ws => gen_ws(a.n, need(a.k, a.model, "--k")?, need(a.beta, a.model, "--beta")?, &mut rng)?,
        Model::Ba => gen_ba(a.n, need(a.m, a.model, "--m")?, &mut rng)?,
    };
    save_edge_list(&g, &a.out)?;
    log::info!("{} nodes, {} edges -> {}", g.node_count(), g.edge_count(), a.out.display());
    Ok(())
}

fn partition_with(strategy: PartitionStrategy, g: &Graph, seed: Option<u64>) -> Result<Partition, Failure> {
    Ok(match (strategy, seed) {
        (PartitionStrategy::Louvain, Some(s)) if !g.is_empty() => partition_louvain(g, Some(&mut Rng::seed(s)))?,
        _ => strategy.apply(g)?,
    })
}

pub fn encode(a: EncodeArgs) -> Outcome {
    if let Some(input) = &a.decode {
        let bytes = fs::read(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display()).into()))?;
        let g = deserialize(&bytes)?.decode()?;
        save_edge_list(&g, &a.out)?;
        println!("decoded {} nodes, {} edges", g.node_count(), g.edge_count());
        return Ok(());
    }
    let path = a.graph.as_deref().expect("clap requires --graph or --decode");
    let g = load_edge_list(path)?;
    let p = partition_with(a.partition, &g, a.seed)?;
    let e = encode_parallel(&g, &p, a.workers)?;
    let bytes = serialize(&e);
    write_file(&a.out, &bytes)?;
    println!(
        "nodes {} edges {} clusters {} inter_edges {} bytes {} adjacency_bytes {}",
        g.node_count(),
        g.edge_count(),
        e.k(),
        e.inter_edge_count(),
        bytes.len(),
        adjacency_matrix_bytes(g.node_count())
    );
    Ok(())
}

pub fn bench(a: BenchArgs) -> Outcome {
    let config = BenchConfig {
        sizes: a.sizes,
        p: a.p,
        repeats: a.repeats,
        partition: a.partition,
        seed: a.seed,
        workers: if a.workers.contains(&0) { Vec::new() } else { a.workers },
        adjacency_cap: a.adjacency_cap,
        warmup: a.warmup,
    };
    let report = bench_scalability(&config)?;
    match &a.out {
        Some(path) => {
            let bytes = match OutputFormat::from_path(path)? {
                OutputFormat::Json => report.to_json()?.into_bytes(),
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    buf
                }
            };
            write_file(path, &bytes)?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Outcome {
    let config = ActivationConfig {
        samples: a.samples,
        noise: a.noise,
        train: TrainConfig {
            epochs: a.epochs,
            batch_size: a.batch_size,
            lr: a.lr,
            seed: a.seed,
            ..ActivationConfig::default().train
        },
        grid: a.grid_size,
        ..ActivationConfig::default()
    };
    let out = run_activation_experiment(a.dataset, a.activation, &config)?;
    if let Some(path) = &a.grid {
        let mut buf = Vec::new();
        out.grid.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &a.model {
        out.network.save(path)?;
    }
    emit(&out.report, a.out.as_deref())
}

fn mnist_config(m: &MnistArgs) -> DimredConfig {
    let defaults = DimredConfig::default();
    DimredConfig {
        data_dir: m.data_dir(),
        train_limit: m.train_limit,
        test_limit: m.test_limit,
        hidden: m.hidden,
        train: TrainConfig {
            epochs: m.epochs,
            batch_size: m.batch_size,
            lr: m.lr,
            seed: m.seed,
            ..defaults.train
        },
        ..defaults
    }
}

pub fn dimred(a: DimredArgs) -> Outcome {
    let mut config = mnist_config(&a.mnist);
    config.ae.train.epochs = a.ae_epochs;
    config.fine_tune_epochs = a.fine_tune_epochs;
    let out = run_dimred_experiment(a.method, &config)?;
    emit(&out.report, a.mnist.out.as_deref())
}

pub fn prune(a: PruneArgs) -> Outcome {
    let config = DimredConfig {
        fine_tune_epochs: a.fine_tune_epochs,
        ..mnist_config(&a.mnist)
    };
    let out = run_prune_experiment(a.fraction, &config)?;
    if let Some(path) = &a.sensitivity {
        let mut text = serde_json::to_string_pretty(&out.sensitivity)?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    emit(&out.report, a.mnist.out.as_deref())
}

pub fn metrics(a: MetricsArgs) -> Outcome {
    let g = load_edge_list(&a.graph)?;
    let mut run = json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "clustering_coefficient": clustering_coefficient(&g)?,
    });
    match average_path_length(&g) {
        Ok(s) => {
            run["average_path_length"] = json!(s.mean);
            run["reachable_pairs"] = json!(s.reachable_pairs);
            run["reachable_fraction"] = json!(s.reachable_fraction);
        }
        Err(GraphError::NoReachablePairs) => run["average_path_length"] = serde_json::Value::Null,
        Err(e) => return Err(e.into()),
    }
    if let Some(strategy) = a.partition {
        let p = strategy.apply(&g)?;
        let split = edge_split(&g, &p)?;
        run["clusters"] = json!(p.k());
        run["modularity"] = json!(modularity(&g, &p)?);
        run["inter_edges"] = json!(split.inter.len());
    }
    let config = json!({
        "graph": a.graph,
        "partition": a.partition.map(|s| s.to_string()),
    });
    let mut report = ExperimentReport::new("metrics", &config, 0)?;
    report.push_run(&run)?;
    emit(&report, a.out.as_deref())
}
