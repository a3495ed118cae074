//! Record encodings.
//!
//! NDJSON: one object per line,
//!
//! ```text
//! {"seq":0,"node":"Rome","len":3,"path":["John","e1","Joe","e2","John","e8","Rome"]}
//! ```
//!
//! `path` alternates node and edge names. An edge traversed backwards is
//! written `^name`, so records decode without ambiguity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Direction, GraphDb};
use crate::pipeline::ResultRecord;
use crate::product::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonRecord {
    pub seq: u64,
    pub node: String,
    pub len: usize,
    pub path: Vec<String>,
}

impl JsonRecord {
    pub fn new(graph: &GraphDb, record: &ResultRecord) -> Self {
        let p = &record.path;
        let mut path = Vec::with_capacity(p.output_size());
        path.push(graph.node_name(p.nodes[0]).to_owned());
        for i in 0..p.edges.len() {
            let e = graph.edge_name(p.edges[i]);
            path.push(match p.directions[i] {
                Direction::Forward => e.to_owned(),
                Direction::Inverse => format!("^{e}"),
            });
            path.push(graph.node_name(p.nodes[i + 1]).to_owned());
        }
        JsonRecord {
            seq: record.seq,
            node: graph.node_name(record.node).to_owned(),
            len: p.len(),
            path,
        }
    }
}

pub fn encode_ndjson(graph: &GraphDb, record: &ResultRecord) -> String {
    serde_json::to_string(&JsonRecord::new(graph, record)).expect("records serialize")
}

pub fn encode_text(graph: &GraphDb, record: &ResultRecord) -> String {
    record.path.display(graph).to_string()
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown edge {0:?}")]
    UnknownEdge(String),
    #[error("path must alternate nodes and edges")]
    Shape,
    #[error("edge {0:?} does not connect its neighbors in the path")]
    Disconnected(String),
    #[error("inconsistent record: {0}")]
    Mismatch(&'static str),
}

/// Parses one NDJSON line back into a record over `graph`.
pub fn decode_ndjson(graph: &GraphDb, line: &str) -> Result<ResultRecord, DecodeError> {
    let rec: JsonRecord = serde_json::from_str(line)?;
    if rec.path.len().is_multiple_of(2) {
        return Err(DecodeError::Shape);
    }
    let node = |name: &str| {
        graph
            .node_id(name)
            .ok_or_else(|| DecodeError::UnknownNode(name.to_owned()))
    };
    let mut path = Path::empty(node(&rec.path[0])?);
    for pair in rec.path[1..].chunks(2) {
        let (name, dir) = match pair[0].strip_prefix('^') {
            Some(n) => (n, Direction::Inverse),
            None => (pair[0].as_str(), Direction::Forward),
        };
        let edge = graph
            .edge_id(name)
            .ok_or_else(|| DecodeError::UnknownEdge(pair[0].clone()))?;
        let to = node(&pair[1])?;
        let e = graph.edge(edge);
        if e.source(dir) != path.end() || e.target(dir) != to {
            return Err(DecodeError::Disconnected(pair[0].clone()));
        }
        path.push(edge, dir, to);
    }
    if path.len() != rec.len {
        return Err(DecodeError::Mismatch("len differs from path length"));
    }
    let answer = node(&rec.node)?;
    if answer != path.end() {
        return Err(DecodeError::Mismatch("node differs from path end"));
    }
    Ok(ResultRecord {
        seq: rec.seq,
        node: answer,
        path,
    })
}
