use std::collections::BTreeMap;

use super::{Partition, PartitionError};
use crate::graphcore::Graph;
use crate::numkit::Rng;

/// Smallest modularity improvement that still counts as a gain.
const MIN_GAIN: f64 = 1e-9;

/// Weighted multigraph at one aggregation level. `self_w[i]` is the total
/// weight of edges internal to super-node `i`.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let a = g.adjacency();
        Self {
            adj: (0..a.len()).map(|i| a.neighbors(i).iter().map(|&j| (j, 1.0)).collect()).collect(),
            self_w: vec![0.0; a.len()],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_w[i]
    }

    /// One community per distinct label, labels already dense `0..k`.
    fn aggregate(&self, comm: &[usize], k: usize) -> Self {
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let mut self_w = vec![0.0; k];
        for i in 0..self.len() {
            let ci = comm[i];
            self_w[ci] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    // Each internal edge is seen from both ends.
                    self_w[ci] += w / 2.0;
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        Self {
            adj: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_w,
        }
    }
}

/// Local-move phase. Returns dense community labels and whether any node
/// moved.
fn local_moves(level: &Level, m: f64, mut rng: Option<&mut Rng>) -> (Vec<usize>, bool) {
    let n = level.len();
    let m2 = 2.0 * m;
    let strength: Vec<f64> = (0..n).map(|i| level.strength(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = strength.clone();
    let mut weight_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;
    loop {
        if let Some(r) = rng.as_deref_mut() {
            r.shuffle(&mut order);
        }
        let mut moved = false;
        for &i in &order {
            let own = comm[i];
            let ki = strength[i];
            for &(j, w) in &level.adj[i] {
                let c = comm[j];
                if weight_to[c] == 0.0 {
                    touched.push(c);
                }
                weight_to[c] += w;
            }
            tot[own] -= ki;
            let gain = |c: usize, w: f64| w - tot[c] * ki / m2;
            let stay = gain(own, weight_to[own]);
            touched.sort_unstable();
            let mut best: Option<(usize, f64)> = None;
            for &c in &touched {
                if c == own {
                    continue;
                }
                let g = gain(c, weight_to[c]);
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((c, g));
                }
            }
            let target = match best {
                Some((c, g)) if (g - stay) / m > MIN_GAIN => c,
                _ => own,
            };
            tot[target] += ki;
            if target != own {
                comm[i] = target;
                moved = true;
            }
            for &c in &touched {
                weight_to[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    // Dense relabel in order of first appearance.
    let mut relabel = vec![usize::MAX; n];
    let mut next = 0;
    for c in comm.iter_mut() {
        if relabel[*c] == usize::MAX {
            relabel[*c] = next;
            next += 1;
        }
        *c = relabel[*c];
    }
    (comm, moved_any)
}

/// Louvain modularity maximisation. Sweeps visit nodes in ascending ID
/// order; passing an `rng` shuffles the order on every sweep instead.
/// Clusters are numbered by their smallest node ID.
pub fn partition_louvain(g: &Graph, mut rng: Option<&mut Rng>) -> Result<Partition, PartitionError> {
    if g.is_empty() {
        return Err(PartitionError::EmptyGraph);
    }
    let n = g.node_count();
    let mut membership: Vec<usize> = (0..n).collect();
    let m = g.edge_count() as f64;
    if m > 0.0 {
        let mut level = Level::from_graph(g);
        loop {
            let (comm, moved) = local_moves(&level, m, rng.as_deref_mut());
            if !moved {
                break;
            }
            for c in membership.iter_mut() {
                *c = comm[*c];
            }
            let k = comm.iter().max().map_or(0, |&c| c + 1);
            level = level.aggregate(&comm, k);
        }
    }
    Ok(Partition::from_labels(g.nodes(), &membership))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{gen_er, gen_ws, NodeId};
    use crate::partition::{modularity, partition_range};
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn clique(ids: std::ops::Range<NodeId>) -> Vec<(NodeId, NodeId)> {
        ids.clone().flat_map(|u| ids.clone().filter(move |&v| v > u).map(move |v| (u, v))).collect()
    }

    /// Maximum modularity over every set partition (restricted growth
    /// strings), with the argmax.
    fn exhaustive_best(g: &Graph) -> (f64, Vec<usize>) {
        let n = g.node_count();
        let mut labels = vec![0usize; n];
        let mut best = (f64::NEG_INFINITY, Vec::new());
        fn rec(i: usize, max: usize, labels: &mut Vec<usize>, g: &Graph, best: &mut (f64, Vec<usize>)) {
            if i == labels.len() {
                let p = Partition::from_labels(g.nodes(), labels);
                let q = modularity(g, &p).unwrap();
                if q > best.0 + 1e-12 {
                    *best = (q, labels.clone());
                }
                return;
            }
            for l in 0..=max {
                labels[i] = l;
                rec(i + 1, max.max(l + 1), labels, g, best);
            }
        }
        if n > 0 {
            rec(1, 1, &mut labels, g, &mut best);
        }
        best
    }

    #[test]
    fn two_cliques_split_at_bridge() {
        let mut edges = clique(0..5);
        edges.extend(clique(5..10));
        edges.push((4, 5));
        let g = Graph::from_edges(edges).unwrap();
        let p = partition_louvain(&g, None).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
        let (q_best, labels) = exhaustive_best(&g);
        assert_eq!(Partition::from_labels(g.nodes(), &labels), p);
        assert!((modularity(&g, &p).unwrap() - q_best).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_stays_whole() {
        let g = Graph::from_edges(clique(0..6)).unwrap();
        let p = partition_louvain(&g, None).unwrap();
        assert_eq!(p.k(), 1);
        let (q_best, _) = exhaustive_best(&g);
        assert!((modularity(&g, &p).unwrap() - q_best).abs() < 1e-12);
    }

    #[test]
    fn edgeless_gives_singletons() {
        let p = partition_louvain(&Graph::empty(7), None).unwrap();
        assert_eq!(p.k(), 7);
        assert!(matches!(partition_louvain(&Graph::default(), None), Err(PartitionError::EmptyGraph)));
    }

    #[test]
    fn ring_of_cliques() {
        let mut edges = Vec::new();
        for c in 0..6u64 {
            edges.extend(clique(c * 4..c * 4 + 4));
            edges.push((c * 4 + 3, ((c + 1) % 6) * 4));
        }
        let g = Graph::from_edges(edges).unwrap();
        let p = partition_louvain(&g, None).unwrap();
        assert_eq!(p.k(), 6);
        assert!(p.sizes().iter().all(|&s| s == 4));
    }

    #[test]
    fn deterministic_and_shuffle_is_seeded() {
        let g = gen_ws(120, 6, 0.05, &mut Rng::seed(3)).unwrap();
        assert_eq!(partition_louvain(&g, None).unwrap(), partition_louvain(&g, None).unwrap());
        let a = partition_louvain(&g, Some(&mut Rng::seed(9))).unwrap();
        let b = partition_louvain(&g, Some(&mut Rng::seed(9))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn near_optimal_on_small_random_graphs() {
        let mut rng = Rng::seed(21);
        for _ in 0..20 {
            let g = gen_er(8, 0.35, &mut rng).unwrap();
            let p = partition_louvain(&g, None).unwrap();
            let (best, _) = exhaustive_best(&g);
            let q = modularity(&g, &p).unwrap();
            assert!(q <= best + 1e-12);
            assert!(q >= 0.8 * best - 1e-12, "q {q} best {best}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn beats_single_cluster_and_covers(seed in any::<u64>(), n in 1usize..80, p in 0.0f64..0.3) {
            let g = gen_er(n, p, &mut Rng::seed(seed)).unwrap();
            let part = partition_louvain(&g, None).unwrap();
            prop_assert!(part.check_covers(&g).is_ok());
            prop_assert!(part.sizes().iter().all(|&s| s >= 1));
            let whole = partition_range(&g, 1).unwrap();
            prop_assert!(modularity(&g, &part).unwrap() >= modularity(&g, &whole).unwrap() - 1e-12);
        }
    }
}
