//! Line-oriented snapshot dump.
//!
//! ```text
//! lcagraph-dump v1
//! counts nodes=<n> edges=<m>
//! {"kind":"node","id":0,"labels":["Flow"],"props":{...}}
//! {"kind":"edge","id":0,"rel_type":"HAS_OUTPUT","src":1,"dst":0,"props":{...}}
//! ```

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EdgeId, Graph, GraphError, NodeId, PropertyMap, PropertyValue};

pub const SNAPSHOT_HEADER: &str = "lcagraph-dump v1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("unsupported dump version: expected {SNAPSHOT_HEADER:?}, found {0:?}")]
    VersionMismatch(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> SnapshotError {
    SnapshotError::Malformed { line, message: message.into() }
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    kind: &'a str,
    id: u64,
    labels: Vec<&'a str>,
    props: BTreeMap<&'a str, &'a PropertyValue>,
}

#[derive(Serialize)]
struct EdgeRecord<'a> {
    kind: &'a str,
    id: u64,
    rel_type: &'a str,
    src: u64,
    dst: u64,
    props: BTreeMap<&'a str, &'a PropertyValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    kind: String,
    id: u64,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    rel_type: Option<String>,
    #[serde(default)]
    src: Option<u64>,
    #[serde(default)]
    dst: Option<u64>,
    props: PropertyMap,
}

/// Writes `graph` as a dump. Output is a pure function of graph content.
pub fn write_snapshot<W: Write>(graph: &Graph, mut out: W) -> io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    writeln!(out, "counts nodes={} edges={}", graph.node_count(), graph.edge_count())?;
    for node in graph.nodes() {
        let rec = NodeRecord {
            kind: "node",
            id: node.id().0,
            labels: node.labels().iter().map(String::as_str).collect(),
            props: node.props().iter().map(|(k, v)| (k.as_str(), v)).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    for edge in graph.edges() {
        let rec = EdgeRecord {
            kind: "edge",
            id: edge.id().0,
            rel_type: edge.rel_type(),
            src: edge.src().0,
            dst: edge.dst().0,
            props: edge.props().iter().map(|(k, v)| (k.as_str(), v)).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

impl Graph {
    /// The dump as a string; convenient for equality checks.
    pub fn to_dump(&self) -> String {
        let mut buf = Vec::new();
        write_snapshot(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is UTF-8")
    }
}

fn parse_counts(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("counts nodes=")?;
    let (nodes, edges) = rest.split_once(" edges=")?;
    Some((nodes.parse().ok()?, edges.parse().ok()?))
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Graph, SnapshotError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header != SNAPSHOT_HEADER {
        return Err(SnapshotError::VersionMismatch(header));
    }
    let counts = lines.next().transpose()?.ok_or_else(|| malformed(2, "missing counts line"))?;
    let (want_nodes, want_edges) =
        parse_counts(&counts).ok_or_else(|| malformed(2, format!("bad counts line {counts:?}")))?;

    let mut graph = Graph::new();
    let mut seen_edge = false;
    let mut last: Option<(bool, u64)> = None;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 3;
        let line = line?;
        let rec: RecordIn = serde_json::from_str(&line).map_err(|e| malformed(lineno, e.to_string()))?;
        let is_edge = match rec.kind.as_str() {
            "node" => false,
            "edge" => true,
            other => return Err(malformed(lineno, format!("unknown record kind {other:?}"))),
        };
        if seen_edge && !is_edge {
            return Err(malformed(lineno, "node record after edge records"));
        }
        if let Some((prev_edge, prev_id)) = last {
            if prev_edge == is_edge && rec.id <= prev_id {
                return Err(malformed(lineno, "records are not in ascending id order"));
            }
        }
        last = Some((is_edge, rec.id));
        seen_edge |= is_edge;
        let result = if is_edge {
            let (Some(rel), Some(src), Some(dst), None) = (rec.rel_type, rec.src, rec.dst, rec.labels) else {
                return Err(malformed(lineno, "edge record needs rel_type, src and dst only"));
            };
            graph.insert_edge(EdgeId(rec.id), &rel, NodeId(src), NodeId(dst), rec.props)
        } else {
            let (Some(labels), None, None, None) = (rec.labels, rec.rel_type, rec.src, rec.dst) else {
                return Err(malformed(lineno, "node record needs labels only"));
            };
            graph.insert_node(NodeId(rec.id), labels, rec.props)
        };
        result.map_err(|e: GraphError| malformed(lineno, e.to_string()))?;
    }
    if graph.node_count() != want_nodes || graph.edge_count() != want_edges {
        return Err(malformed(
            2,
            format!(
                "counts say nodes={want_nodes} edges={want_edges} but dump holds nodes={} edges={}",
                graph.node_count(),
                graph.edge_count()
            ),
        ));
    }
    Ok(graph)
}
