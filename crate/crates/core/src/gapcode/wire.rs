//! Byte layout, every integer an unsigned LEB128 varint:
//!
//! ```text
//! "GGE1" | k
//!        | per cluster: count, base, gaps…, intra count, pairs…
//!        | group count
//!        | per group: p, q, count, pairs…
//! ```
//!
//! A pair is written as the delta of its first position from the previous
//! pair's first position in the same list, then its second position.

use std::collections::BTreeSet;

use super::{decode_cluster_gaps, GapEncodedGraph, GapError, GapSubgraph, InterGroup, FORMAT_VERSION};
use crate::graphcore::NodeId;
use crate::partition::Partition;

pub const MAGIC: [u8; 4] = *b"GGE1";

pub fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Reads one varint at `*offset`, advancing it.
pub fn read_varint(bytes: &[u8], offset: &mut usize) -> Result<u64, GapError> {
    let start = *offset;
    let mut value = 0u64;
    for shift in (0..).step_by(7) {
        let &byte = bytes.get(*offset).ok_or(GapError::Truncated { offset: *offset })?;
        *offset += 1;
        let data = u64::from(byte & 0x7f);
        if shift == 63 && data > 1 || shift > 63 {
            return Err(GapError::VarintOverflow { offset: start });
        }
        value |= data << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
    }
    unreachable!("loop returns or errors")
}

fn write_pairs(out: &mut Vec<u8>, pairs: impl ExactSizeIterator<Item = (usize, usize)>) {
    write_varint(out, pairs.len() as u64);
    let mut prev = 0usize;
    for (a, b) in pairs {
        write_varint(out, (a - prev) as u64);
        write_varint(out, b as u64);
        prev = a;
    }
}

/// Position of a node inside its cluster: a flat table when IDs are
/// compact, binary search otherwise.
struct Positions<'a> {
    partition: &'a Partition,
    table: Option<Vec<u32>>,
}

impl<'a> Positions<'a> {
    fn new(partition: &'a Partition) -> Self {
        let n = partition.node_count();
        let max = partition.clusters().iter().filter_map(|c| c.last()).max().copied();
        let table = max.filter(|&m| (m as usize) < 4 * n + 64).map(|m| {
            let mut t = vec![0u32; m as usize + 1];
            for members in partition.clusters() {
                for (pos, &id) in members.iter().enumerate() {
                    t[id as usize] = pos as u32;
                }
            }
            t
        });
        Self { partition, table }
    }

    fn get(&self, cluster: usize, id: NodeId) -> usize {
        match &self.table {
            Some(t) => t[id as usize] as usize,
            None => self.partition.cluster(cluster).binary_search(&id).expect("inter endpoint belongs to its cluster"),
        }
    }
}

pub fn serialize(e: &GapEncodedGraph) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 2 * e.node_count() + 4 * e.edge_count());
    out.extend_from_slice(&MAGIC);
    write_varint(&mut out, e.subgraphs.len() as u64);
    for s in &e.subgraphs {
        write_varint(&mut out, s.gaps.len() as u64);
        for &g in &s.gaps {
            write_varint(&mut out, g);
        }
        write_pairs(&mut out, s.intra.iter().copied());
    }
    write_varint(&mut out, e.groups.len() as u64);
    let pos = Positions::new(&e.partition);
    for g in &e.groups {
        write_varint(&mut out, g.p as u64);
        write_varint(&mut out, g.q as u64);
        write_pairs(&mut out, g.edges.iter().map(|&(vi, vj)| (pos.get(g.p, vi), pos.get(g.q, vj))));
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Reader<'_> {
    fn varint(&mut self) -> Result<u64, GapError> {
        read_varint(self.bytes, &mut self.offset)
    }

    fn usize(&mut self) -> Result<usize, GapError> {
        let at = self.offset;
        usize::try_from(self.varint()?).map_err(|_| GapError::Malformed(format!("value at byte {at} exceeds usize")))
    }

    /// A length prefix; each element needs at least `min_bytes`, so a
    /// count the remaining input cannot hold is a truncation.
    fn count(&mut self, min_bytes: usize) -> Result<usize, GapError> {
        let n = self.usize()?;
        let remaining = self.bytes.len() - self.offset;
        if n.saturating_mul(min_bytes) > remaining {
            return Err(GapError::Truncated { offset: self.bytes.len() });
        }
        Ok(n)
    }

    /// Pairs with strictly increasing `(a, b)`, `a < len_a`, `b < len_b`.
    fn pairs(&mut self, len_a: usize, len_b: usize, what: &str) -> Result<Vec<(usize, usize)>, GapError> {
        let n = self.count(2)?;
        let mut out = Vec::with_capacity(n);
        let mut prev = 0usize;
        for _ in 0..n {
            let a = prev
                .checked_add(self.usize()?)
                .ok_or_else(|| GapError::Malformed(format!("{what}: position overflow")))?;
            let b = self.usize()?;
            if a >= len_a || b >= len_b {
                return Err(GapError::Malformed(format!("{what}: position pair ({a}, {b}) out of range")));
            }
            if out.last().is_some_and(|&last| last >= (a, b)) {
                return Err(GapError::Malformed(format!("{what}: pairs not strictly increasing")));
            }
            out.push((a, b));
            prev = a;
        }
        Ok(out)
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<GapEncodedGraph, GapError> {
    if bytes.len() < MAGIC.len() {
        return Err(GapError::Truncated { offset: bytes.len() });
    }
    if bytes[..3] != MAGIC[..3] {
        return Err(GapError::BadMagic);
    }
    if bytes[3] != MAGIC[3] {
        return Err(GapError::VersionMismatch {
            found: char::from(bytes[3]),
            expected: char::from(b'0' + FORMAT_VERSION),
        });
    }
    let mut r = Reader { bytes, offset: 4 };
    let k = r.count(2)?;
    let mut subgraphs = Vec::with_capacity(k);
    let mut clusters = Vec::with_capacity(k);
    for c in 0..k {
        let n = r.count(1)?;
        let gaps = (0..n).map(|_| r.varint()).collect::<Result<Vec<_>, _>>()?;
        let ids = decode_cluster_gaps(c, &gaps)?;
        let intra = r.pairs(n, n, &format!("cluster {c} intra edges"))?;
        if let Some(&(a, b)) = intra.iter().find(|&&(a, b)| a >= b) {
            return Err(GapError::Malformed(format!("cluster {c}: intra pair ({a}, {b}) not ordered")));
        }
        subgraphs.push(GapSubgraph { cluster: c, gaps, intra });
        clusters.push(ids);
    }
    let partition = Partition::from_clusters_allow_empty(clusters)
        .map_err(|e| GapError::Malformed(format!("clusters overlap: {e}")))?;
    let group_count = r.count(3)?;
    let mut groups: Vec<InterGroup> = Vec::with_capacity(group_count);
    let mut seen = BTreeSet::new();
    for _ in 0..group_count {
        let (p, q) = (r.usize()?, r.usize()?);
        if p >= q || q >= k {
            return Err(GapError::Malformed(format!("invalid cluster pair ({p}, {q}) for k = {k}")));
        }
        if groups.last().is_some_and(|g| (g.p, g.q) >= (p, q)) || !seen.insert((p, q)) {
            return Err(GapError::Malformed("cluster pairs not strictly increasing".into()));
        }
        let (ids_p, ids_q) = (partition.cluster(p), partition.cluster(q));
        let pairs = r.pairs(ids_p.len(), ids_q.len(), &format!("group ({p}, {q})"))?;
        if pairs.is_empty() {
            return Err(GapError::Malformed(format!("group ({p}, {q}) is empty")));
        }
        groups.push(InterGroup {
            p,
            q,
            edges: pairs.into_iter().map(|(a, b)| (ids_p[a], ids_q[b])).collect(),
        });
    }
    if r.offset != bytes.len() {
        return Err(GapError::TrailingBytes {
            count: bytes.len() - r.offset,
        });
    }
    Ok(GapEncodedGraph {
        partition,
        subgraphs,
        groups,
    })
}
