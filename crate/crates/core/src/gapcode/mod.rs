//! Hierarchical gap encoding: each cluster's sorted node IDs become a base
//! plus consecutive differences, intra-cluster edges become position pairs,
//! and cross-cluster edges are grouped by cluster pair.

mod update;
mod wire;

pub use update::UpdateStats;
pub use wire::{deserialize, read_varint, serialize, write_varint, MAGIC};

use std::collections::HashMap;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphcore::{Graph, GraphError, NodeId};
use crate::partition::{Partition, PartitionError};

pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("partition does not match graph: {0}")]
    Partition(#[from] PartitionError),
    #[error("cluster {cluster}: gap at index {index} is not positive")]
    MalformedGaps { cluster: usize, index: usize },
    #[error("inter-edge endpoints coincide at node {0}")]
    SameEndpoint(NodeId),
    #[error("node {0} already present")]
    NodeExists(NodeId),
    #[error("node {0} not present")]
    NodeMissing(NodeId),
    #[error("edge ({0}, {1}) already present")]
    EdgeExists(NodeId, NodeId),
    #[error("edge ({0}, {1}) not present")]
    EdgeMissing(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("cluster {cluster} out of range for k = {k}")]
    ClusterOutOfRange { cluster: usize, k: usize },
    #[error("worker count must be at least 1")]
    InvalidWorkers,
    #[error("not a gap-encoded graph (bad magic)")]
    BadMagic,
    #[error("unsupported format version {found:?} (expected {expected:?})")]
    VersionMismatch { found: char, expected: char },
    #[error("input truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("varint at byte {offset} overflows 64 bits")]
    VarintOverflow { offset: usize },
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("{count} trailing byte(s) after the encoding")]
    TrailingBytes { count: usize },
    #[error("decoded graph is invalid: {0}")]
    Graph(#[from] GraphError),
}

/// One cluster: `gaps = [base, g₁, g₂, …]` over its sorted IDs, and its
/// internal edges as `(i, j)` positions into that sorted list with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GapSubgraph {
    pub cluster: usize,
    pub gaps: Vec<u64>,
    pub intra: Vec<(usize, usize)>,
}

/// Cross-cluster edge `vi ∈ p`, `vj ∈ q`, `p < q`, with `gap = |vi − vj|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterEdge {
    pub p: usize,
    pub q: usize,
    pub vi: NodeId,
    pub vj: NodeId,
    pub gap: u64,
}

/// All inter edges between clusters `p < q`, as `(vi, vj)` sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterGroup {
    pub p: usize,
    pub q: usize,
    pub edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GapEncodedGraph {
    partition: Partition,
    subgraphs: Vec<GapSubgraph>,
    groups: Vec<InterGroup>,
}

/// `[v₀, v₁ − v₀, v₂ − v₁, …]` for sorted, unique `ids`.
pub fn encode_gaps(ids: &[NodeId]) -> Vec<u64> {
    let mut out = Vec::with_capacity(ids.len());
    if let Some(&first) = ids.first() {
        out.push(first);
        out.extend(ids.windows(2).map(|w| w[1] - w[0]));
    }
    out
}

/// Prefix sums of a gap sequence. Every gap after the base must be ≥ 1.
pub fn decode_gaps(seq: &[u64]) -> Result<Vec<NodeId>, GapError> {
    decode_cluster_gaps(0, seq)
}

fn decode_cluster_gaps(cluster: usize, seq: &[u64]) -> Result<Vec<NodeId>, GapError> {
    let mut ids = Vec::with_capacity(seq.len());
    let mut acc: NodeId = 0;
    for (index, &g) in seq.iter().enumerate() {
        if index == 0 {
            acc = g;
        } else {
            if g == 0 {
                return Err(GapError::MalformedGaps { cluster, index });
            }
            acc = acc
                .checked_add(g)
                .ok_or_else(|| GapError::Malformed(format!("cluster {cluster}: node id overflows 64 bits")))?;
        }
        ids.push(acc);
    }
    Ok(ids)
}

/// `|vi − vj|`; equal endpoints cannot form an inter-cluster edge.
pub fn inter_edge_gap(vi: NodeId, vj: NodeId) -> Result<u64, GapError> {
    if vi == vj {
        return Err(GapError::SameEndpoint(vi));
    }
    Ok(vi.abs_diff(vj))
}

/// Bit-packed upper-triangle adjacency matrix plus a 16-byte header:
/// `⌈n(n−1)/2 / 8⌉ + 16` bytes.
pub fn adjacency_matrix_bytes(n: usize) -> u64 {
    let n = n as u64;
    (n * n.saturating_sub(1) / 2).div_ceil(8) + 16
}

/// Dense baseline: 16-byte header (`"ADJ1"`, `n` as little-endian u64,
/// four zero bytes) followed by the strict upper triangle of the adjacency
/// matrix over node indices, row-major, one bit per pair, LSB first.
pub fn encode_adjacency_matrix(g: &Graph) -> Vec<u8> {
    let n = g.node_count();
    let mut out = Vec::with_capacity(adjacency_matrix_bytes(n) as usize);
    out.extend_from_slice(b"ADJ1");
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    let bits = n * n.saturating_sub(1) / 2;
    let start = out.len();
    out.resize(start + bits.div_ceil(8), 0);
    let index = IndexOf::new(g);
    for &(u, v) in g.edges() {
        let (i, j) = (index.get(u), index.get(v));
        let bit = i * n - i * (i + 1) / 2 + (j - i - 1);
        out[start + bit / 8] |= 1 << (bit % 8);
    }
    out
}

/// Idealised parallel time `T_total / k`.
pub fn ideal_parallel_time(total_seconds: f64, k: usize) -> f64 {
    total_seconds / k.max(1) as f64
}

impl GapEncodedGraph {
    pub fn version(&self) -> u8 {
        FORMAT_VERSION
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn subgraphs(&self) -> &[GapSubgraph] {
        &self.subgraphs
    }

    pub fn groups(&self) -> &[InterGroup] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn node_count(&self) -> usize {
        self.partition.node_count()
    }

    pub fn intra_edge_count(&self) -> usize {
        self.subgraphs.iter().map(|s| s.intra.len()).sum()
    }

    pub fn inter_edge_count(&self) -> usize {
        self.groups.iter().map(|g| g.edges.len()).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.intra_edge_count() + self.inter_edge_count()
    }

    pub fn inter_edges(&self) -> impl Iterator<Item = InterEdge> + '_ {
        self.groups.iter().flat_map(|g| {
            g.edges.iter().map(move |&(vi, vj)| InterEdge {
                p: g.p,
                q: g.q,
                vi,
                vj,
                gap: vi.abs_diff(vj),
            })
        })
    }

    /// Rebuilds the plain graph: prefix-sums every gap sequence, maps
    /// intra positions back to IDs, and adds the inter edges.
    pub fn decode(&self) -> Result<Graph, GapError> {
        let mut nodes = Vec::with_capacity(self.node_count());
        let mut edges = Vec::with_capacity(self.edge_count());
        for s in &self.subgraphs {
            let ids = decode_cluster_gaps(s.cluster, &s.gaps)?;
            for &(i, j) in &s.intra {
                let (Some(&u), Some(&v)) = (ids.get(i), ids.get(j)) else {
                    return Err(GapError::Malformed(format!(
                        "cluster {}: position pair ({i}, {j}) outside {} nodes",
                        s.cluster,
                        ids.len()
                    )));
                };
                edges.push((u, v));
            }
            nodes.extend(ids);
        }
        for g in &self.groups {
            edges.extend_from_slice(&g.edges);
        }
        Ok(Graph::new(nodes, edges)?)
    }

    fn group_index(&self, p: usize, q: usize) -> Result<usize, usize> {
        self.groups.binary_search_by(|g| (g.p, g.q).cmp(&(p, q)))
    }
}

pub fn decode(e: &GapEncodedGraph) -> Result<Graph, GapError> {
    e.decode()
}

/// Maps node IDs to their index in the graph's sorted node list, directly
/// when the IDs are exactly `0..n`.
struct IndexOf<'a> {
    nodes: &'a [NodeId],
    contiguous: bool,
}

impl<'a> IndexOf<'a> {
    fn new(g: &'a Graph) -> Self {
        let nodes = g.nodes();
        let contiguous = nodes.last().is_none_or(|&last| last as usize + 1 == nodes.len());
        Self { nodes, contiguous }
    }

    fn get(&self, id: NodeId) -> usize {
        if self.contiguous {
            id as usize
        } else {
            self.nodes.binary_search(&id).expect("edge endpoints are graph nodes")
        }
    }
}

/// Inter-edge buckets keyed by cluster pair: a dense `k × k` table for
/// small `k`, a hash map otherwise.
enum Buckets {
    Dense { k: usize, slots: Vec<Vec<(NodeId, NodeId)>> },
    Sparse(HashMap<(usize, usize), Vec<(NodeId, NodeId)>>),
}

const DENSE_BUCKET_LIMIT: usize = 1 << 16;

impl Buckets {
    fn new(k: usize) -> Self {
        if k * k <= DENSE_BUCKET_LIMIT {
            Self::Dense {
                k,
                slots: vec![Vec::new(); k * k],
            }
        } else {
            Self::Sparse(HashMap::new())
        }
    }

    fn push(&mut self, p: usize, q: usize, e: (NodeId, NodeId)) {
        match self {
            Self::Dense { k, slots } => slots[p * *k + q].push(e),
            Self::Sparse(map) => map.entry((p, q)).or_default().push(e),
        }
    }

    fn into_sorted(self) -> Vec<InterGroup> {
        let mut groups: Vec<InterGroup> = match self {
            Self::Dense { k, slots } => slots
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .map(|(i, edges)| InterGroup { p: i / k, q: i % k, edges })
                .collect(),
            Self::Sparse(map) => map.into_iter().map(|((p, q), edges)| InterGroup { p, q, edges }).collect(),
        };
        groups.sort_unstable_by_key(|g| (g.p, g.q));
        groups
    }
}

struct ChunkSplit {
    intra: Vec<Vec<(usize, usize)>>,
    groups: Vec<InterGroup>,
}

/// Classifies a run of edges. `slot[i]` is `(cluster, position)` of the
/// node at index `i`.
fn split_chunk(edges: &[(NodeId, NodeId)], index: &IndexOf<'_>, slot: &[(usize, usize)], k: usize) -> ChunkSplit {
    let mut intra = vec![Vec::new(); k];
    let mut buckets = Buckets::new(k);
    for &(u, v) in edges {
        let (cu, pu) = slot[index.get(u)];
        let (cv, pv) = slot[index.get(v)];
        if cu == cv {
            intra[cu].push((pu, pv));
        } else if cu < cv {
            buckets.push(cu, cv, (u, v));
        } else {
            buckets.push(cv, cu, (v, u));
        }
    }
    ChunkSplit {
        intra,
        groups: buckets.into_sorted(),
    }
}

fn merge_groups(parts: Vec<Vec<InterGroup>>) -> Vec<InterGroup> {
    let mut all: Vec<InterGroup> = parts.into_iter().flatten().collect();
    // Stable: equal keys keep chunk order.
    all.sort_by_key(|g| (g.p, g.q));
    let mut merged: Vec<InterGroup> = Vec::new();
    for g in all {
        match merged.last_mut() {
            Some(last) if (last.p, last.q) == (g.p, g.q) => last.edges.extend(g.edges),
            _ => merged.push(g),
        }
    }
    for g in &mut merged {
        g.edges.sort_unstable();
    }
    merged
}

/// Serial gap encoding of `g` under partition `p`.
pub fn encode(g: &Graph, p: &Partition) -> Result<GapEncodedGraph, GapError> {
    encode_with(g, p, 1)
}

/// A cluster index with its local intra-cluster edges.
type ClusterJob = (usize, Vec<(usize, usize)>);

/// Same output as [`encode`], with edge classification and per-cluster
/// encoding spread over `workers` threads and merged in order.
pub fn encode_parallel(g: &Graph, p: &Partition, workers: usize) -> Result<GapEncodedGraph, GapError> {
    if workers == 0 {
        return Err(GapError::InvalidWorkers);
    }
    encode_with(g, p, workers)
}

fn encode_with(g: &Graph, p: &Partition, workers: usize) -> Result<GapEncodedGraph, GapError> {
    p.check_covers(g)?;
    let k = p.k();
    let index = IndexOf::new(g);
    let mut slot = vec![(0usize, 0usize); g.node_count()];
    for (c, members) in p.clusters().iter().enumerate() {
        for (pos, &id) in members.iter().enumerate() {
            slot[index.get(id)] = (c, pos);
        }
    }
    let edges = g.edges();
    let parts: Vec<ChunkSplit> = if workers == 1 || edges.len() < 2 * workers {
        vec![split_chunk(edges, &index, &slot, k)]
    } else {
        let chunk = edges.len().div_ceil(workers);
        thread::scope(|s| {
            let handles: Vec<_> = edges
                .chunks(chunk)
                .map(|c| {
                    let (index, slot) = (&index, &slot);
                    s.spawn(move || split_chunk(c, index, slot, k))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("encoder worker panicked")).collect()
        })
    };
    let mut intra: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    let mut group_parts = Vec::with_capacity(parts.len());
    for part in parts {
        for (acc, chunk) in intra.iter_mut().zip(part.intra) {
            if acc.is_empty() {
                *acc = chunk;
            } else {
                acc.extend(chunk);
            }
        }
        group_parts.push(part.groups);
    }
    let groups = merge_groups(group_parts);

    let build = |(c, intra): ClusterJob| GapSubgraph {
        cluster: c,
        gaps: encode_gaps(p.cluster(c)),
        intra,
    };
    let jobs: Vec<ClusterJob> = intra.into_iter().enumerate().collect();
    let subgraphs: Vec<GapSubgraph> = if workers == 1 || k < 2 * workers {
        jobs.into_iter().map(build).collect()
    } else {
        let per = k.div_ceil(workers);
        let mut batches: Vec<Vec<ClusterJob>> = Vec::new();
        let mut it = jobs.into_iter().peekable();
        while it.peek().is_some() {
            batches.push(it.by_ref().take(per).collect());
        }
        thread::scope(|s| {
            let handles: Vec<_> = batches
                .into_iter()
                .map(|b| s.spawn(move || b.into_iter().map(build).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("encoder worker panicked")).collect()
        })
    };
    Ok(GapEncodedGraph {
        partition: p.clone(),
        subgraphs,
        groups,
    })
}
