//! Undirected simple graphs: storage, random generators, edge-list files
//! and the clustering / path-length metrics.

mod generators;
mod io;
mod metrics;

pub use generators::{gen_ba, gen_er, gen_ws};
pub use io::{load_edge_list, read_edge_list, save_edge_list, write_edge_list, EdgeListStats};
pub use metrics::{average_path_length, clustering_coefficient, local_clustering, PathLengthStats};

use std::path::PathBuf;

use thiserror::Error;

pub type NodeId = u64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph parameter: {0}")]
    InvalidParameter(String),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({u}, {v}) references a node outside the node set")]
    MissingEndpoint { u: NodeId, v: NodeId },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("graph has no nodes")]
    Empty,
    #[error("no reachable pairs: the graph has no edges")]
    NoReachablePairs,
}

/// Undirected simple graph. Nodes are kept sorted and unique; edges are
/// stored once as `(u, v)` with `u < v`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

/// Compressed adjacency over node *indices* (positions in [`Graph::nodes`]).
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    /// Sorted neighbour indices of node index `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }
}

fn canonical(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    /// Builds a graph from any node and edge collections. Duplicates (in
    /// either orientation) collapse; self-loops and edges with unknown
    /// endpoints are rejected.
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if nodes.binary_search(&u).is_err() || nodes.binary_search(&v).is_err() {
                return Err(GraphError::MissingEndpoint { u, v });
            }
            canon.push(canonical(u, v));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self { nodes, edges: canon })
    }

    /// Graph whose node set is exactly the edge endpoints.
    pub fn from_edges(edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, GraphError> {
        let edges: Vec<_> = edges.into_iter().collect();
        let nodes: Vec<NodeId> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        Self::new(nodes, edges)
    }

    /// `n` isolated nodes `0..n`.
    pub fn empty(n: usize) -> Self {
        Self {
            nodes: (0..n as NodeId).collect(),
            edges: Vec::new(),
        }
    }

    /// Trusted constructor for already-canonical data.
    pub(crate) fn from_canonical(nodes: Vec<NodeId>, edges: Vec<(NodeId, NodeId)>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v));
        Self { nodes, edges }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.binary_search(&id).is_ok()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u != v && self.edges.binary_search(&canonical(u, v)).is_ok()
    }

    /// Position of `id` in the sorted node list.
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub fn adjacency(&self) -> Adjacency {
        let n = self.nodes.len();
        let idx: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (self.index_of(u).expect("endpoint"), self.index_of(v).expect("endpoint")))
            .collect();
        let mut offsets = vec![0usize; n + 1];
        for &(a, b) in &idx {
            offsets[a + 1] += 1;
            offsets[b + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        for &(a, b) in &idx {
            targets[fill[a]] = b;
            fill[a] += 1;
            targets[fill[b]] = a;
            fill[b] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Adjacency { offsets, targets }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let adj = self.adjacency();
        (0..adj.len()).map(|i| adj.degree(i)).collect()
    }

    pub fn add_node(&mut self, id: NodeId) -> bool {
        match self.nodes.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.nodes.insert(pos, id);
                true
            }
        }
    }

    /// Removes `id` and every incident edge.
    pub fn remove_node(&mut self, id: NodeId) -> bool {
        match self.nodes.binary_search(&id) {
            Ok(pos) => {
                self.nodes.remove(pos);
                self.edges.retain(|&(u, v)| u != id && v != id);
                true
            }
            Err(_) => false,
        }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !self.contains_node(u) || !self.contains_node(v) {
            return Err(GraphError::MissingEndpoint { u, v });
        }
        let e = canonical(u, v);
        Ok(match self.edges.binary_search(&e) {
            Ok(_) => false,
            Err(pos) => {
                self.edges.insert(pos, e);
                true
            }
        })
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        match self.edges.binary_search(&canonical(u, v)) {
            Ok(pos) => {
                self.edges.remove(pos);
                true
            }
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalises_edges() {
        let g = Graph::new([3, 1, 2, 3], [(2, 1), (1, 2), (3, 1)]).unwrap();
        assert_eq!(g.nodes(), &[1, 2, 3]);
        assert_eq!(g.edges(), &[(1, 2), (1, 3)]);
        assert!(g.has_edge(3, 1) && !g.has_edge(2, 3));
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(Graph::new([1], [(1, 1)]), Err(GraphError::SelfLoop(1))));
        assert!(matches!(Graph::new([1], [(1, 2)]), Err(GraphError::MissingEndpoint { u: 1, v: 2 })));
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let g = Graph::from_edges([(10, 30), (20, 10), (30, 20), (30, 40)]).unwrap();
        let adj = g.adjacency();
        assert_eq!(adj.neighbors(0), &[1, 2]);
        assert_eq!(adj.neighbors(2), &[0, 1, 3]);
        assert_eq!(g.degrees(), vec![2, 2, 3, 1]);
        assert!(adj.connected(3, 2) && !adj.connected(0, 3));
    }

    #[test]
    fn incremental_edits() {
        let mut g = Graph::empty(3);
        assert!(g.add_edge(0, 2).unwrap());
        assert!(!g.add_edge(2, 0).unwrap());
        assert!(g.add_node(9));
        assert!(!g.add_node(9));
        g.add_edge(9, 1).unwrap();
        assert!(g.remove_node(9));
        assert_eq!(g.edges(), &[(0, 2)]);
        assert!(g.remove_edge(2, 0));
        assert!(!g.remove_edge(2, 0));
        assert!(g.add_edge(0, 7).is_err());
    }
}
