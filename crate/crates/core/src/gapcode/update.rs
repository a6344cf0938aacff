//! In-place edits of an encoding. Each operation validates before touching
//! anything, so a failed call leaves the encoding unchanged.

use serde::{Deserialize, Serialize};

use super::{encode_gaps, GapEncodedGraph, GapError, GapSubgraph, InterGroup};
use crate::graphcore::NodeId;

/// Which clusters an update touched. Node edits rebuild one cluster's gap
/// sequence; edge edits touch the one or two clusters holding the endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub clusters_reencoded: Vec<usize>,
    pub inter_edges_removed: usize,
}

impl UpdateStats {
    pub fn touched(&self) -> usize {
        self.clusters_reencoded.len()
    }
}

impl GapEncodedGraph {
    fn locate(&self, id: NodeId) -> Result<(usize, usize), GapError> {
        let c = self.partition.cluster_of(id).ok_or(GapError::NodeMissing(id))?;
        let pos = self.partition.cluster(c).binary_search(&id).expect("partition is consistent");
        Ok((c, pos))
    }

    fn regap(&mut self, c: usize) {
        self.subgraphs[c].gaps = encode_gaps(self.partition.cluster(c));
    }

    /// Inserts an isolated node into `cluster`. `cluster == k` opens a new
    /// cluster at the end.
    pub fn add_node(&mut self, id: NodeId, cluster: usize) -> Result<UpdateStats, GapError> {
        if self.partition.cluster_of(id).is_some() {
            return Err(GapError::NodeExists(id));
        }
        let k = self.k();
        if cluster > k {
            return Err(GapError::ClusterOutOfRange { cluster, k });
        }
        if cluster == k {
            self.subgraphs.push(GapSubgraph {
                cluster,
                ..GapSubgraph::default()
            });
        }
        self.partition.insert(id, cluster);
        let pos = self.partition.cluster(cluster).binary_search(&id).expect("just inserted");
        for (a, b) in &mut self.subgraphs[cluster].intra {
            *a += usize::from(*a >= pos);
            *b += usize::from(*b >= pos);
        }
        self.regap(cluster);
        Ok(UpdateStats {
            clusters_reencoded: vec![cluster],
            inter_edges_removed: 0,
        })
    }

    /// Removes a node with all incident edges. A cluster left empty stays
    /// in place so other cluster indices do not shift.
    pub fn remove_node(&mut self, id: NodeId) -> Result<UpdateStats, GapError> {
        let (c, pos) = self.locate(id)?;
        let intra = &mut self.subgraphs[c].intra;
        intra.retain(|&(a, b)| a != pos && b != pos);
        for (a, b) in intra.iter_mut() {
            *a -= usize::from(*a > pos);
            *b -= usize::from(*b > pos);
        }
        let mut removed = 0;
        for g in self.groups.iter_mut().filter(|g| g.p == c || g.q == c) {
            let before = g.edges.len();
            if g.p == c {
                g.edges.retain(|&(vi, _)| vi != id);
            } else {
                g.edges.retain(|&(_, vj)| vj != id);
            }
            removed += before - g.edges.len();
        }
        self.groups.retain(|g| !g.edges.is_empty());
        self.partition.remove(id);
        self.regap(c);
        Ok(UpdateStats {
            clusters_reencoded: vec![c],
            inter_edges_removed: removed,
        })
    }

    /// Resolves an edge to either an intra slot `(cluster, (a, b))` or an
    /// inter slot `((p, q), (vi, vj))`.
    fn edge_slot(&self, u: NodeId, v: NodeId) -> Result<EdgeSlot, GapError> {
        if u == v {
            return Err(GapError::SelfLoop(u));
        }
        let (cu, pu) = self.locate(u)?;
        let (cv, pv) = self.locate(v)?;
        Ok(if cu == cv {
            EdgeSlot::Intra {
                c: cu,
                pair: (pu.min(pv), pu.max(pv)),
            }
        } else if cu < cv {
            EdgeSlot::Inter { p: cu, q: cv, e: (u, v) }
        } else {
            EdgeSlot::Inter { p: cv, q: cu, e: (v, u) }
        })
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<UpdateStats, GapError> {
        let exists = GapError::EdgeExists(u.min(v), u.max(v));
        match self.edge_slot(u, v)? {
            EdgeSlot::Intra { c, pair } => {
                let intra = &mut self.subgraphs[c].intra;
                let at = intra.binary_search(&pair).err().ok_or(exists)?;
                intra.insert(at, pair);
                Ok(UpdateStats {
                    clusters_reencoded: vec![c],
                    inter_edges_removed: 0,
                })
            }
            EdgeSlot::Inter { p, q, e } => {
                match self.group_index(p, q) {
                    Ok(gi) => {
                        let edges = &mut self.groups[gi].edges;
                        let at = edges.binary_search(&e).err().ok_or(exists)?;
                        edges.insert(at, e);
                    }
                    Err(gi) => self.groups.insert(gi, InterGroup { p, q, edges: vec![e] }),
                }
                Ok(UpdateStats {
                    clusters_reencoded: vec![p, q],
                    inter_edges_removed: 0,
                })
            }
        }
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<UpdateStats, GapError> {
        let missing = GapError::EdgeMissing(u.min(v), u.max(v));
        match self.edge_slot(u, v)? {
            EdgeSlot::Intra { c, pair } => {
                let intra = &mut self.subgraphs[c].intra;
                let at = intra.binary_search(&pair).map_err(|_| missing)?;
                intra.remove(at);
                Ok(UpdateStats {
                    clusters_reencoded: vec![c],
                    inter_edges_removed: 0,
                })
            }
            EdgeSlot::Inter { p, q, e } => {
                let gi = self.group_index(p, q).map_err(|_| GapError::EdgeMissing(u.min(v), u.max(v)))?;
                let edges = &mut self.groups[gi].edges;
                let at = edges.binary_search(&e).map_err(|_| missing)?;
                edges.remove(at);
                if edges.is_empty() {
                    self.groups.remove(gi);
                }
                Ok(UpdateStats {
                    clusters_reencoded: vec![p, q],
                    inter_edges_removed: 1,
                })
            }
        }
    }
}

enum EdgeSlot {
    Intra { c: usize, pair: (usize, usize) },
    Inter { p: usize, q: usize, e: (NodeId, NodeId) },
}
