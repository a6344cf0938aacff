//! Disjoint node partitions: Louvain modularity clustering, contiguous
//! range chunks, and the intra/inter edge split used by the gap encoder.

mod louvain;

pub use louvain::partition_louvain;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphcore::{Graph, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("cluster count k = {k} outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("node {0} is not assigned to any cluster")]
    MissingNode(NodeId),
    #[error("node {0} appears in more than one cluster")]
    Overlap(NodeId),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("partition assigns node {0}, which is not in the graph")]
    UnknownNode(NodeId),
    #[error("unknown partition strategy {0:?} (expected `louvain`, `range:<k>` or `range:sqrt`)")]
    InvalidStrategy(String),
}

/// Disjoint cover of a node set. Cluster `i` holds its node IDs sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    clusters: Vec<Vec<NodeId>>,
    assignment: BTreeMap<NodeId, usize>,
}

impl Partition {
    /// Validates disjointness and non-emptiness; each cluster is sorted.
    pub fn from_clusters(clusters: Vec<Vec<NodeId>>) -> Result<Self, PartitionError> {
        if let Some(i) = clusters.iter().position(Vec::is_empty) {
            return Err(PartitionError::EmptyCluster(i));
        }
        Self::from_clusters_allow_empty(clusters)
    }

    /// As [`Partition::from_clusters`] but tolerates empty clusters, which
    /// arise when dynamic updates remove the last node of a cluster.
    pub(crate) fn from_clusters_allow_empty(mut clusters: Vec<Vec<NodeId>>) -> Result<Self, PartitionError> {
        let mut assignment = BTreeMap::new();
        for (c, members) in clusters.iter_mut().enumerate() {
            members.sort_unstable();
            for &id in members.iter() {
                if assignment.insert(id, c).is_some() {
                    return Err(PartitionError::Overlap(id));
                }
            }
        }
        Ok(Self { clusters, assignment })
    }

    /// Builds clusters from a per-node label, relabelling so clusters are
    /// numbered by their smallest node ID.
    pub(crate) fn from_labels(nodes: &[NodeId], labels: &[usize]) -> Self {
        let mut order: BTreeMap<usize, usize> = BTreeMap::new();
        let mut clusters: Vec<Vec<NodeId>> = Vec::new();
        for (&id, &l) in nodes.iter().zip(labels) {
            let next = order.len();
            let c = *order.entry(l).or_insert(next);
            if c == clusters.len() {
                clusters.push(Vec::new());
            }
            clusters[c].push(id);
        }
        Self::from_clusters(clusters).expect("labels give a disjoint cover")
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, i: usize) -> &[NodeId] {
        &self.clusters[i]
    }

    pub fn clusters(&self) -> &[Vec<NodeId>] {
        &self.clusters
    }

    pub fn cluster_of(&self, id: NodeId) -> Option<usize> {
        self.assignment.get(&id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    /// Checks that the partition's node set equals the graph's.
    pub fn check_covers(&self, g: &Graph) -> Result<(), PartitionError> {
        for &id in g.nodes() {
            if !self.assignment.contains_key(&id) {
                return Err(PartitionError::MissingNode(id));
            }
        }
        if self.assignment.len() != g.node_count() {
            let extra = self.assignment.keys().find(|&&id| !g.contains_node(id)).expect("size mismatch implies extra node");
            return Err(PartitionError::UnknownNode(*extra));
        }
        Ok(())
    }

    pub(crate) fn insert(&mut self, id: NodeId, cluster: usize) {
        if cluster == self.clusters.len() {
            self.clusters.push(Vec::new());
        }
        let members = &mut self.clusters[cluster];
        let pos = members.binary_search(&id).expect_err("caller checked absence");
        members.insert(pos, id);
        self.assignment.insert(id, cluster);
    }

    pub(crate) fn remove(&mut self, id: NodeId) -> Option<usize> {
        let c = self.assignment.remove(&id)?;
        let members = &mut self.clusters[c];
        let pos = members.binary_search(&id).expect("assignment and clusters agree");
        members.remove(pos);
        Some(c)
    }
}

/// Sorted node IDs cut into `k` contiguous chunks; the first `n mod k`
/// chunks get one extra node.
pub fn partition_range(g: &Graph, k: usize) -> Result<Partition, PartitionError> {
    let n = g.node_count();
    if k == 0 || k > n {
        return Err(PartitionError::InvalidK { k, n });
    }
    let (base, extra) = (n / k, n % k);
    let mut clusters = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        clusters.push(g.nodes()[start..start + len].to_vec());
        start += len;
    }
    Partition::from_clusters(clusters)
}

/// Edges classified by the partition: `intra[c]` holds edges with both
/// endpoints in cluster `c`, `inter` the rest. Order follows the graph's
/// sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSplit {
    pub intra: Vec<Vec<(NodeId, NodeId)>>,
    pub inter: Vec<(NodeId, NodeId)>,
}

impl EdgeSplit {
    pub fn intra_count(&self) -> usize {
        self.intra.iter().map(Vec::len).sum()
    }
}

pub fn edge_split(g: &Graph, p: &Partition) -> Result<EdgeSplit, PartitionError> {
    let mut split = EdgeSplit {
        intra: vec![Vec::new(); p.k()],
        inter: Vec::new(),
    };
    for &(u, v) in g.edges() {
        let cu = p.cluster_of(u).ok_or(PartitionError::MissingNode(u))?;
        let cv = p.cluster_of(v).ok_or(PartitionError::MissingNode(v))?;
        if cu == cv {
            split.intra[cu].push((u, v));
        } else {
            split.inter.push((u, v));
        }
    }
    Ok(split)
}

/// Newman modularity with resolution 1:
/// `Q = Σ_c [ L_c / m − (d_c / 2m)² ]`. An edgeless graph scores 0.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64, PartitionError> {
    p.check_covers(g)?;
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut internal = vec![0.0; p.k()];
    let mut degree = vec![0.0; p.k()];
    for &(u, v) in g.edges() {
        let (cu, cv) = (p.cluster_of(u).expect("covered"), p.cluster_of(v).expect("covered"));
        degree[cu] += 1.0;
        degree[cv] += 1.0;
        if cu == cv {
            internal[cu] += 1.0;
        }
    }
    Ok(internal.iter().zip(&degree).map(|(l, d)| l / m - (d / (2.0 * m)).powi(2)).sum())
}

/// Partitioning strategy as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PartitionStrategy {
    Louvain,
    Range(usize),
    /// `range:⌈√n⌉`, resolved per graph.
    RangeSqrt,
}

impl PartitionStrategy {
    /// Replaces `RangeSqrt` by the concrete `Range(⌈√n⌉)`.
    pub fn resolve(self, n: usize) -> Self {
        match self {
            Self::RangeSqrt => Self::Range(((n as f64).sqrt().ceil() as usize).max(1)),
            other => other,
        }
    }

    /// An empty graph gets the empty partition under every strategy.
    pub fn apply(self, g: &Graph) -> Result<Partition, PartitionError> {
        if g.is_empty() {
            return Ok(Partition::default());
        }
        match self.resolve(g.node_count()) {
            Self::Louvain => partition_louvain(g, None),
            Self::Range(k) => partition_range(g, k),
            Self::RangeSqrt => unreachable!("resolved above"),
        }
    }
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Louvain => f.write_str("louvain"),
            Self::Range(k) => write!(f, "range:{k}"),
            Self::RangeSqrt => f.write_str("range:sqrt"),
        }
    }
}

impl FromStr for PartitionStrategy {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PartitionError::InvalidStrategy(s.to_string());
        match s {
            "louvain" => Ok(Self::Louvain),
            "range" | "range:sqrt" => Ok(Self::RangeSqrt),
            _ => {
                let k = s.strip_prefix("range:").ok_or_else(bad)?;
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(Self::Range(k))
            }
        }
    }
}

impl TryFrom<String> for PartitionStrategy {
    type Error = PartitionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PartitionStrategy> for String {
    fn from(s: PartitionStrategy) -> Self {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::gen_er;
    use crate::numkit::Rng;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};

    #[test]
    fn range_chunk_sizes() {
        let g = Graph::empty(10);
        assert_eq!(partition_range(&g, 3).unwrap().sizes(), vec![4, 3, 3]);
        assert_eq!(partition_range(&g, 1).unwrap().cluster(0), g.nodes());
        let singles = partition_range(&g, 10).unwrap();
        assert!(singles.sizes().iter().all(|&s| s == 1));
        assert_eq!(partition_range(&g, 0), Err(PartitionError::InvalidK { k: 0, n: 10 }));
        assert_eq!(partition_range(&g, 11), Err(PartitionError::InvalidK { k: 11, n: 10 }));
    }

    #[test]
    fn range_follows_sorted_ids() {
        let g = Graph::new([40, 10, 30, 20, 50], []).unwrap();
        let p = partition_range(&g, 2).unwrap();
        assert_eq!(p.clusters(), &[vec![10, 20, 30], vec![40, 50]]);
        assert_eq!(p.cluster_of(40), Some(1));
    }

    #[test]
    fn construction_checks() {
        assert_eq!(Partition::from_clusters(vec![vec![1], vec![]]), Err(PartitionError::EmptyCluster(1)));
        assert_eq!(Partition::from_clusters(vec![vec![1, 2], vec![2]]), Err(PartitionError::Overlap(2)));
        let p = Partition::from_clusters(vec![vec![3, 1], vec![2]]).unwrap();
        assert_eq!(p.cluster(0), &[1, 3]);
        let g = Graph::empty(4);
        assert_eq!(p.check_covers(&g), Err(PartitionError::MissingNode(0)));
        let g = Graph::new([1, 2], []).unwrap();
        assert_eq!(p.check_covers(&g), Err(PartitionError::UnknownNode(3)));
    }

    #[test]
    fn split_extremes() {
        let g = gen_er(30, 0.2, &mut Rng::seed(1)).unwrap();
        let one = edge_split(&g, &partition_range(&g, 1).unwrap()).unwrap();
        assert_eq!((one.intra_count(), one.inter.len()), (g.edge_count(), 0));
        let all = edge_split(&g, &partition_range(&g, 30).unwrap()).unwrap();
        assert_eq!((all.intra_count(), all.inter.len()), (0, g.edge_count()));
        let partial = Partition::from_clusters(vec![(0..29).collect()]).unwrap();
        let g2 = Graph::from_edges([(0, 29)]).unwrap();
        assert_eq!(edge_split(&g2, &partial), Err(PartitionError::MissingNode(29)));
    }

    #[test]
    fn modularity_values() {
        // Two triangles joined by one edge, split along the bridge:
        // m = 7, each side L = 3, d = 7 → Q = 2(3/7 − 1/4).
        let g = Graph::from_edges([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let p = Partition::from_clusters(vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert!((modularity(&g, &p).unwrap() - 2.0 * (3.0 / 7.0 - 0.25)).abs() < 1e-15);
        let whole = partition_range(&g, 1).unwrap();
        assert!(modularity(&g, &whole).unwrap().abs() < 1e-15);
        assert_eq!(modularity(&Graph::empty(3), &partition_range(&Graph::empty(3), 3).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn strategy_strings() {
        for s in ["louvain", "range:4", "range:sqrt"] {
            assert_eq!(s.parse::<PartitionStrategy>().unwrap().to_string(), s);
        }
        assert_eq!("range".parse::<PartitionStrategy>().unwrap(), PartitionStrategy::RangeSqrt);
        for bad in ["range:0", "range:x", "spectral", ""] {
            assert!(bad.parse::<PartitionStrategy>().is_err(), "{bad}");
        }
        assert_eq!(PartitionStrategy::RangeSqrt.resolve(100), PartitionStrategy::Range(10));
        assert_eq!(PartitionStrategy::RangeSqrt.resolve(101), PartitionStrategy::Range(11));
        let json = serde_json::to_string(&PartitionStrategy::Range(3)).unwrap();
        assert_eq!(json, "\"range:3\"");
    }

    #[test]
    fn insert_and_remove_keep_order() {
        let mut p = Partition::from_clusters(vec![vec![3, 5, 8]]).unwrap();
        p.insert(6, 0);
        assert_eq!(p.cluster(0), &[3, 5, 6, 8]);
        p.insert(1, 1);
        assert_eq!((p.k(), p.cluster_of(1)), (2, Some(1)));
        assert_eq!(p.remove(1), Some(1));
        assert!(p.cluster(1).is_empty());
        assert_eq!(p.remove(1), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn range_and_split_invariants(seed in any::<u64>(), n in 1usize..60, kf in 0.0f64..1.0) {
            let g = gen_er(n, 0.15, &mut Rng::seed(seed)).unwrap();
            let k = 1 + (kf * (n - 1) as f64) as usize;
            let p = partition_range(&g, k).unwrap();
            prop_assert_eq!(p.k(), k);
            prop_assert!(p.check_covers(&g).is_ok());
            prop_assert!(p.sizes().iter().all(|&s| s >= 1));
            let sizes = p.sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let split = edge_split(&g, &p).unwrap();
            prop_assert_eq!(split.intra_count() + split.inter.len(), g.edge_count());
            for (c, edges) in split.intra.iter().enumerate() {
                for &(u, v) in edges {
                    prop_assert!(p.cluster_of(u) == Some(c) && p.cluster_of(v) == Some(c));
                }
            }
            for &(u, v) in &split.inter {
                prop_assert!(p.cluster_of(u) != p.cluster_of(v));
            }
        }
    }
}
