use std::collections::BTreeSet;

use super::{Graph, GraphError, NodeId};
use crate::numkit::Rng;

fn check_probability(name: &str, p: f64) -> Result<(), GraphError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Erdős–Rényi `G(n, p)` on nodes `0..n`: every pair drawn independently.
pub fn gen_er(n: usize, p: f64, rng: &mut Rng) -> Result<Graph, GraphError> {
    check_probability("p", p)?;
    let mut edges = Vec::new();
    for u in 0..n as NodeId {
        for v in (u + 1)..n as NodeId {
            if rng.unit() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_canonical((0..n as NodeId).collect(), edges))
}

/// Watts–Strogatz: ring lattice where each node links to its `k` nearest
/// neighbours, then each lattice edge `(u, u+j)` is rewired with
/// probability `beta` to a uniformly chosen node that is neither `u` nor
/// already adjacent to it.
pub fn gen_ws(n: usize, k: usize, beta: f64, rng: &mut Rng) -> Result<Graph, GraphError> {
    check_probability("beta", beta)?;
    if !k.is_multiple_of(2) || k >= n {
        return Err(GraphError::InvalidParameter(format!(
            "ring degree k must be even and < n, got k = {k}, n = {n}"
        )));
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.unit() >= beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.index(n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges = Vec::new();
    for (u, set) in adj.iter().enumerate() {
        edges.extend(set.range(u + 1..).map(|&v| (u as NodeId, v as NodeId)));
    }
    Ok(Graph::from_canonical((0..n as NodeId).collect(), edges))
}

/// Barabási–Albert: an `m`-clique seed, then each new node attaches `m`
/// edges to distinct existing nodes chosen proportionally to degree.
pub fn gen_ba(n: usize, m: usize, rng: &mut Rng) -> Result<Graph, GraphError> {
    if m == 0 || m >= n {
        return Err(GraphError::InvalidParameter(format!(
            "attachment count must satisfy 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);
    // Each node appears once per incident edge; a lone seed node gets one
    // entry so the first attachment has somewhere to go.
    let mut repeated: Vec<NodeId> = Vec::new();
    for u in 0..m as NodeId {
        for v in (u + 1)..m as NodeId {
            edges.push((u, v));
        }
        repeated.extend(std::iter::repeat_n(u, (m - 1).max(1)));
    }
    let mut targets = BTreeSet::new();
    for v in m as NodeId..n as NodeId {
        targets.clear();
        while targets.len() < m {
            targets.insert(repeated[rng.index(repeated.len())]);
        }
        for &t in &targets {
            edges.push((t, v));
            repeated.push(t);
        }
        repeated.extend(std::iter::repeat_n(v, m));
    }
    edges.sort_unstable();
    Ok(Graph::from_canonical((0..n as NodeId).collect(), edges))
}
