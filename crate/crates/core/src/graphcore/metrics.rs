use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Adjacency, Graph, GraphError};

/// Local clustering of every node, in node order. Nodes of degree below
/// two get 0.
pub fn local_clustering(g: &Graph) -> Vec<f64> {
    let adj = g.adjacency();
    (0..adj.len()).map(|i| local(&adj, i)).collect()
}

fn local(adj: &Adjacency, i: usize) -> f64 {
    let nbrs = adj.neighbors(i);
    let d = nbrs.len();
    if d < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (a, &u) in nbrs.iter().enumerate() {
        for &v in &nbrs[a + 1..] {
            if adj.connected(u, v) {
                links += 1;
            }
        }
    }
    links as f64 / (d * (d - 1) / 2) as f64
}

/// Mean local clustering coefficient over all nodes.
pub fn clustering_coefficient(g: &Graph) -> Result<f64, GraphError> {
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    let sum: f64 = local_clustering(g).iter().sum();
    Ok(sum / g.node_count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLengthStats {
    /// Mean shortest-path length over reachable ordered pairs.
    pub mean: f64,
    pub reachable_pairs: u64,
    /// Reachable ordered pairs over `n(n−1)`.
    pub reachable_fraction: f64,
}

/// BFS from every node. Unreachable pairs are excluded from the mean and
/// reported through `reachable_fraction`.
pub fn average_path_length(g: &Graph) -> Result<PathLengthStats, GraphError> {
    let n = g.node_count();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let adj = g.adjacency();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    let (mut total, mut pairs) = (0u64, 0u64);
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in adj.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    total += dist[v] as u64;
                    pairs += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    if pairs == 0 {
        return Err(GraphError::NoReachablePairs);
    }
    Ok(PathLengthStats {
        mean: total as f64 / pairs as f64,
        reachable_pairs: pairs,
        reachable_fraction: pairs as f64 / (n as u64 * (n as u64 - 1)) as f64,
    })
}
