use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::Environment;
use super::{median, ExperimentError};
use crate::gapcode::{
    adjacency_matrix_bytes, encode, encode_adjacency_matrix, encode_parallel, ideal_parallel_time, serialize,
};
use crate::graphcore::{gen_er, Graph};
use crate::numkit::Rng;
use crate::partition::{Partition, PartitionStrategy};

/// Column order of the benchmark CSV.
pub const BENCH_COLUMNS: [&str; 9] = [
    "n",
    "p",
    "method",
    "partition",
    "encode_ms_median",
    "bytes",
    "inter_edges",
    "seed",
    "repeats",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub p: f64,
    pub repeats: usize,
    pub partition: PartitionStrategy,
    pub seed: u64,
    /// Worker counts for the parallel-encode timings; empty skips them.
    pub workers: Vec<usize>,
    /// Above this many nodes the adjacency baseline is not materialised;
    /// its size is still reported from the closed form.
    pub adjacency_cap: usize,
    /// Untimed runs before the timed ones.
    pub warmup: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 500, 1000, 2000, 5000],
            p: 0.05,
            repeats: 5,
            partition: PartitionStrategy::RangeSqrt,
            seed: 0,
            workers: vec![2, 4],
            adjacency_cap: 20_000,
            warmup: 1,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.sizes.is_empty() {
            return bad("sizes must not be empty".into());
        }
        if self.sizes.contains(&0) {
            return bad("sizes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1".into());
        }
        if self.workers.contains(&0) {
            return bad("worker counts must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Gap,
    Adjacency,
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gap => "gap",
            Self::Adjacency => "adjacency",
        })
    }
}

impl FromStr for BenchMethod {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gap" => Ok(Self::Gap),
            "adjacency" => Ok(Self::Adjacency),
            _ => Err(ExperimentError::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

/// One size × method measurement. `encode_ms_median` is `None` when the
/// baseline was skipped for being above the cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub p: f64,
    pub method: BenchMethod,
    pub partition: String,
    pub encode_ms_median: Option<f64>,
    pub bytes: u64,
    pub inter_edges: u64,
    pub seed: u64,
    pub repeats: usize,
}

/// Gap encoding with `workers` threads against the serial run, plus the
/// `T_serial / k` model value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelRecord {
    pub n: usize,
    pub workers: usize,
    pub clusters: usize,
    pub serial_ms: f64,
    pub parallel_ms: f64,
    pub ideal_ms: f64,
    pub identical_bytes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub experiment: String,
    pub config: BenchConfig,
    pub records: Vec<BenchRecord>,
    pub parallel: Vec<ParallelRecord>,
    pub environment: Environment,
}

impl BenchReport {
    pub fn record(&self, n: usize, method: BenchMethod) -> Option<&BenchRecord> {
        self.records.iter().find(|r| r.n == n && r.method == method)
    }

    /// The fixed-schema CSV, one row per record.
    pub fn write_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BENCH_COLUMNS)?;
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                r.p.to_string(),
                r.method.to_string(),
                r.partition.clone(),
                r.encode_ms_median.map(|t| format!("{t:.6}")).unwrap_or_default(),
                r.bytes.to_string(),
                r.inter_edges.to_string(),
                r.seed.to_string(),
                r.repeats.to_string(),
            ])?;
        }
        w.flush().map_err(|source| ExperimentError::Io {
            path: "<csv>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ExperimentError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Median wall time in milliseconds of `repeats` calls after `warmup`
/// untimed ones; also returns the last result.
fn time_median<T>(warmup: usize, repeats: usize, mut f: impl FnMut() -> T) -> (f64, T) {
    for _ in 0..warmup {
        black_box(f());
    }
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let out = black_box(f());
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    (median(&mut times), last.expect("repeats >= 1"))
}

/// Per-size graph seed, independent of which other sizes are benchmarked.
fn graph_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn bench_size(config: &BenchConfig, n: usize) -> Result<(Vec<BenchRecord>, Vec<ParallelRecord>), ExperimentError> {
    let g: Graph = gen_er(n, config.p, &mut Rng::seed(graph_seed(config.seed, n)))?;
    let strategy = config.partition.resolve(n);
    let partition: Partition = strategy.apply(&g)?;
    let (gap_ms, bytes) = time_median(config.warmup, config.repeats, || -> Result<Vec<u8>, ExperimentError> {
        Ok(serialize(&encode(&g, &partition)?))
    });
    let bytes = bytes?;
    let inter = encode(&g, &partition)?.inter_edge_count() as u64;
    log::info!("n = {n}: gap {gap_ms:.3} ms, {} bytes, {inter} inter edges", bytes.len());
    let base = |method, encode_ms_median, bytes, inter_edges| BenchRecord {
        n,
        p: config.p,
        method,
        partition: strategy.to_string(),
        encode_ms_median,
        bytes,
        inter_edges,
        seed: config.seed,
        repeats: config.repeats,
    };
    let mut records = vec![base(BenchMethod::Gap, Some(gap_ms), bytes.len() as u64, inter)];
    if n <= config.adjacency_cap {
        let (adj_ms, adj) = time_median(config.warmup, config.repeats, || encode_adjacency_matrix(&g));
        records.push(base(BenchMethod::Adjacency, Some(adj_ms), adj.len() as u64, 0));
    } else {
        log::info!("n = {n}: adjacency baseline skipped (cap {})", config.adjacency_cap);
        records.push(base(BenchMethod::Adjacency, None, adjacency_matrix_bytes(n), 0));
    }

    let mut parallel = Vec::new();
    if !config.workers.is_empty() {
        let (serial_ms, _) = time_median(config.warmup, config.repeats, || encode(&g, &partition));
        for &w in &config.workers {
            let (parallel_ms, enc) = time_median(config.warmup, config.repeats, || encode_parallel(&g, &partition, w));
            let identical = serialize(&enc?) == bytes;
            parallel.push(ParallelRecord {
                n,
                workers: w,
                clusters: partition.k(),
                serial_ms,
                parallel_ms,
                ideal_ms: ideal_parallel_time(serial_ms, partition.k()),
                identical_bytes: identical,
            });
        }
    }
    Ok((records, parallel))
}

/// Encodes ER(n, p) for each size with both representations and records
/// median timings, sizes and inter-cluster edge counts.
pub fn bench_scalability(config: &BenchConfig) -> Result<BenchReport, ExperimentError> {
    config.validate()?;
    let mut records = Vec::new();
    let mut parallel = Vec::new();
    for &n in &config.sizes {
        let (r, p) = bench_size(config, n)?;
        records.extend(r);
        parallel.extend(p);
    }
    Ok(BenchReport {
        experiment: "scalability".into(),
        config: config.clone(),
        records,
        parallel,
        environment: Environment::current(config.seed),
    })
}
