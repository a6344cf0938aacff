use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, GraphError, NodeId};

/// Counts of input lines that were tolerated but dropped while reading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

fn parse_id(token: &str, line: usize) -> Result<NodeId, GraphError> {
    token.parse().map_err(|_| GraphError::Parse {
        line,
        message: format!("expected a non-negative integer node id, found {token:?}"),
    })
}

/// Reads whitespace-separated `u v` lines. Blank lines and lines starting
/// with `#` are skipped. A line holding a single id declares an isolated
/// node. Self-loops are dropped and duplicates collapsed; both are counted.
pub fn read_edge_list(reader: impl BufRead) -> Result<(Graph, EdgeListStats), GraphError> {
    let mut stats = EdgeListStats::default();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| GraphError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens.as_slice() {
            [u] => nodes.push(parse_id(u, lineno)?),
            [u, v] => {
                let (u, v) = (parse_id(u, lineno)?, parse_id(v, lineno)?);
                nodes.push(u);
                nodes.push(v);
                if u == v {
                    stats.self_loops += 1;
                } else {
                    edges.push((u.min(v), u.max(v)));
                }
            }
            _ => {
                return Err(GraphError::Parse {
                    line: lineno,
                    message: format!("expected `u v`, found {} tokens", tokens.len()),
                })
            }
        }
    }
    let raw = edges.len();
    let graph = Graph::new(nodes, edges)?;
    stats.duplicates = raw - graph.edge_count();
    if stats.self_loops > 0 {
        log::warn!("dropped {} self-loop(s) from edge list", stats.self_loops);
    }
    Ok((graph, stats))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_edge_list(BufReader::new(file)).map(|(g, _)| g)
}

/// Isolated nodes first, one per line, then every edge as `u v` with
/// `u < v` in sorted order. Reading the output back gives the same graph.
pub fn write_edge_list(g: &Graph, mut out: impl Write) -> std::io::Result<()> {
    let degrees = g.degrees();
    for (&id, &d) in g.nodes().iter().zip(&degrees) {
        if d == 0 {
            writeln!(out, "{id}")?;
        }
    }
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    let io_err = |source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_edge_list(g, BufWriter::new(file)).map_err(io_err)
}
