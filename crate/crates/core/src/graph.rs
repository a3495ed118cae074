//! Immutable edge-labeled multigraph, its text loader, and per-label CSR
//! adjacency indexes (forward and inverse).
//!
//! Node, label and edge identifiers are interned to dense integers on load.
//! Every engine works on the integer ids; names are only used again when
//! results are rendered.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use thiserror::Error;

/// Dense node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Dense edge identifier; equal to the edge's position in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

/// Dense label identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Traversal direction of an edge: along `from -> to`, or backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn slot(self) -> usize {
        match self {
            Direction::Forward => 0,
            Direction::Inverse => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub label: LabelId,
    pub to: NodeId,
}

impl Edge {
    /// The endpoint reached when leaving `node` along this edge in `dir`.
    pub fn target(&self, dir: Direction) -> NodeId {
        match dir {
            Direction::Forward => self.to,
            Direction::Inverse => self.from,
        }
    }

    pub fn source(&self, dir: Direction) -> NodeId {
        match dir {
            Direction::Forward => self.from,
            Direction::Inverse => self.to,
        }
    }
}

/// One entry of an adjacency list: the edge used and the node it leads to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hop {
    pub node: NodeId,
    pub edge: EdgeId,
}

/// How [`GraphDb::neighbors`] answers adjacency requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexMode {
    /// Build the CSR for a (label, direction) on first use and keep it.
    #[default]
    CsrCache,
    /// Every CSR is built up front.
    CsrFull,
    /// No index; every request scans the edge list.
    Scan,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: malformed line {text:?} (expected `node <id>`, `<from> <label> <to>` or `<from> <label> <to> <edge_id>`)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate edge id {id:?}")]
    DuplicateEdgeId { line: usize, id: String },
    #[error("line {line}: explicit and implicit edge ids cannot be mixed")]
    MixedEdgeIds { line: usize },
    #[error("line {line}: edge id {id:?} may not start with '^'")]
    ReservedEdgeId { line: usize, id: String },
}

#[derive(Debug, Default, Clone)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Three-array adjacency index for one (label, direction).
///
/// `index` carries a terminal offset, so the neighbors of `src[i]` are
/// always `tgt[index[i]..index[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrIndex {
    pub label: LabelId,
    pub direction: Direction,
    pub src: Vec<NodeId>,
    pub index: Vec<usize>,
    pub tgt: Vec<Hop>,
}

impl CsrIndex {
    /// Builds the index over all edges carrying `label`. An unknown label
    /// yields an empty index.
    pub fn build(graph: &GraphDb, label: LabelId, direction: Direction) -> CsrIndex {
        let mut pairs: Vec<(NodeId, Hop)> = graph
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, e)| {
                let hop = Hop {
                    node: e.target(direction),
                    edge: EdgeId(i as u32),
                };
                (e.source(direction), hop)
            })
            .collect();
        pairs.sort_unstable();

        let mut src = Vec::new();
        let mut index = vec![0];
        let mut tgt = Vec::with_capacity(pairs.len());
        for (source, hop) in pairs {
            if src.last() != Some(&source) {
                if !src.is_empty() {
                    index.push(tgt.len());
                }
                src.push(source);
            }
            tgt.push(hop);
        }
        if !src.is_empty() {
            index.push(tgt.len());
        }
        CsrIndex {
            label,
            direction,
            src,
            index,
            tgt,
        }
    }

    pub fn neighbors(&self, node: NodeId) -> &[Hop] {
        match self.src.binary_search(&node) {
            Ok(i) => &self.tgt[self.index[i]..self.index[i + 1]],
            Err(_) => &[],
        }
    }

    pub fn byte_size(&self) -> usize {
        self.src.len() * std::mem::size_of::<NodeId>()
            + self.index.len() * std::mem::size_of::<usize>()
            + self.tgt.len() * std::mem::size_of::<Hop>()
    }
}

/// Iterator over the neighbors of a node for one (label, direction).
pub enum Neighbors<'g> {
    Indexed(std::slice::Iter<'g, Hop>),
    Scanned(std::vec::IntoIter<Hop>),
}

impl Iterator for Neighbors<'_> {
    type Item = Hop;

    fn next(&mut self) -> Option<Hop> {
        match self {
            Neighbors::Indexed(it) => it.next().copied(),
            Neighbors::Scanned(it) => it.next(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            Neighbors::Indexed(it) => it.size_hint(),
            Neighbors::Scanned(it) => it.size_hint(),
        }
    }
}

/// Edge-labeled multigraph with distinct edge identities.
///
/// The graph is immutable once built. The CSR cache is filled lazily behind
/// `OnceLock`s, so a `&GraphDb` can be shared by concurrent queries.
#[derive(Debug, Default)]
pub struct GraphDb {
    nodes: Interner,
    labels: Interner,
    edge_names: Vec<String>,
    edges: Vec<Edge>,
    mode: IndexMode,
    // slot = 2 * label + direction
    csr: Vec<OnceLock<CsrIndex>>,
}

impl GraphDb {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.get(name).map(NodeId)
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels.get(name).map(LabelId)
    }

    pub fn edge_id(&self, name: &str) -> Option<EdgeId> {
        // Edge names are only looked up when decoding output, so a scan is fine.
        self.edge_names
            .iter()
            .position(|n| n == name)
            .map(|i| EdgeId(i as u32))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes.names[id.index()]
    }

    pub fn label_name(&self, id: LabelId) -> &str {
        &self.labels.names[id.index()]
    }

    pub fn edge_name(&self, id: EdgeId) -> &str {
        &self.edge_names[id.index()]
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn label_ids(&self) -> impl Iterator<Item = LabelId> {
        (0..self.labels.len() as u32).map(LabelId)
    }

    pub fn index_mode(&self) -> IndexMode {
        self.mode
    }

    /// Switches the adjacency strategy. `CsrFull` builds every index now.
    pub fn set_index_mode(&mut self, mode: IndexMode) {
        self.mode = mode;
        if mode == IndexMode::CsrFull {
            self.build_all_csr();
        }
    }

    pub fn build_all_csr(&self) {
        for label in self.label_ids() {
            for dir in [Direction::Forward, Direction::Inverse] {
                self.csr(label, dir);
            }
        }
    }

    /// Cached CSR for (label, direction), built on first request.
    pub fn csr(&self, label: LabelId, direction: Direction) -> &CsrIndex {
        let slot = 2 * label.index() + direction.slot();
        self.csr[slot].get_or_init(|| CsrIndex::build(self, label, direction))
    }

    /// Number of CSR indexes built so far and their total size in bytes.
    pub fn csr_usage(&self) -> (usize, usize) {
        self.csr
            .iter()
            .filter_map(OnceLock::get)
            .fold((0, 0), |(n, b), c| (n + 1, b + c.byte_size()))
    }

    /// Edges leaving `node` with `label` in `direction`, sorted by
    /// (neighbor, edge).
    pub fn neighbors(&self, node: NodeId, label: LabelId, direction: Direction) -> Neighbors<'_> {
        if label.index() >= self.labels.len() {
            return Neighbors::Scanned(Vec::new().into_iter());
        }
        match self.mode {
            IndexMode::CsrCache | IndexMode::CsrFull => {
                Neighbors::Indexed(self.csr(label, direction).neighbors(node).iter())
            }
            IndexMode::Scan => {
                let mut hops: Vec<Hop> = self
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.label == label && e.source(direction) == node)
                    .map(|(i, e)| Hop {
                        node: e.target(direction),
                        edge: EdgeId(i as u32),
                    })
                    .collect();
                hops.sort_unstable();
                Neighbors::Scanned(hops.into_iter())
            }
        }
    }

    /// Renders the graph in the loader's text format, with explicit edge ids.
    pub fn render(&self) -> String {
        let mut out = String::new();
        // Declaring every node up front preserves the interning order.
        for name in &self.nodes.names {
            let _ = writeln!(out, "node {name}");
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                self.node_name(e.from),
                self.label_name(e.label),
                self.node_name(e.to),
                self.edge_names[i]
            );
        }
        out
    }
}

impl fmt::Display for GraphDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Incremental construction of a [`GraphDb`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Interner,
    labels: Interner,
    edge_names: Vec<String>,
    edge_name_index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> NodeId {
        NodeId(self.nodes.intern(name))
    }

    /// Adds an edge named `e<k>` where `k` is its position.
    pub fn add_edge(&mut self, from: &str, label: &str, to: &str) -> EdgeId {
        let name = format!("e{}", self.edges.len());
        self.push_edge(from, label, to, name)
    }

    /// Adds an edge with an explicit name; `None` if the name is taken.
    pub fn add_named_edge(
        &mut self,
        from: &str,
        label: &str,
        to: &str,
        name: &str,
    ) -> Option<EdgeId> {
        if self.edge_name_index.contains_key(name) {
            return None;
        }
        Some(self.push_edge(from, label, to, name.to_owned()))
    }

    fn push_edge(&mut self, from: &str, label: &str, to: &str, name: String) -> EdgeId {
        let edge = Edge {
            from: NodeId(self.nodes.intern(from)),
            label: LabelId(self.labels.intern(label)),
            to: NodeId(self.nodes.intern(to)),
        };
        let id = EdgeId(self.edges.len() as u32);
        self.edge_name_index.insert(name.clone(), id.index());
        self.edge_names.push(name);
        self.edges.push(edge);
        id
    }

    pub fn build(self) -> GraphDb {
        let csr = (0..2 * self.labels.len())
            .map(|_| OnceLock::new())
            .collect();
        GraphDb {
            nodes: self.nodes,
            labels: self.labels,
            edge_names: self.edge_names,
            edges: self.edges,
            mode: IndexMode::default(),
            csr,
        }
    }
}

/// Parses the line-oriented graph format.
///
/// `#` starts a comment, `node <id>` declares a node, and
/// `<from> <label> <to> [<edge_id>]` declares an edge. Without explicit ids,
/// edges are named `e0, e1, ...` in file order.
pub fn load_graph(text: &str) -> Result<GraphDb, GraphError> {
    let mut builder = GraphBuilder::new();
    let mut explicit: Option<bool> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["node", id] => {
                builder.add_node(id);
            }
            [from, label, to] => {
                if explicit == Some(true) {
                    return Err(GraphError::MixedEdgeIds { line: line_no });
                }
                explicit = Some(false);
                builder.add_edge(from, label, to);
            }
            [from, label, to, id] => {
                if explicit == Some(false) {
                    return Err(GraphError::MixedEdgeIds { line: line_no });
                }
                explicit = Some(true);
                if id.starts_with('^') {
                    return Err(GraphError::ReservedEdgeId {
                        line: line_no,
                        id: (*id).to_owned(),
                    });
                }
                if builder.add_named_edge(from, label, to, id).is_none() {
                    return Err(GraphError::DuplicateEdgeId {
                        line: line_no,
                        id: (*id).to_owned(),
                    });
                }
            }
            _ => {
                return Err(GraphError::Malformed {
                    line: line_no,
                    text: raw.trim().to_owned(),
                })
            }
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSR_SAMPLE: &str = "\
n1 a n2 e1
n1 b n3 e2
n1 a n4 e3
n4 a n1 e4
n3 b n4 e6
n4 a n2 e5
";

    fn hops(g: &GraphDb, list: &[Hop]) -> Vec<(String, String)> {
        list.iter()
            .map(|h| {
                (
                    g.node_name(h.node).to_owned(),
                    g.edge_name(h.edge).to_owned(),
                )
            })
            .collect()
    }

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn loads_csr_sample_graph() {
        let g = load_graph(CSR_SAMPLE).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.label_count(), 2);
    }

    #[test]
    fn implicit_ids_follow_file_order() {
        let g = load_graph("n1 a n2\nn1 b n3\n# comment\n\nn1 a n4 # trailing\n").unwrap();
        let names: Vec<_> = (0..3).map(|i| g.edge_name(EdgeId(i)).to_owned()).collect();
        assert_eq!(names, ["e0", "e1", "e2"]);
        assert_eq!(g.edge(EdgeId(2)).to, g.node_id("n4").unwrap());
    }

    #[test]
    fn empty_and_isolated() {
        let g = load_graph("").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
        let g = load_graph("node x\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert!(g.node_id("x").is_some());
    }

    #[test]
    fn loader_errors() {
        assert_eq!(
            load_graph("a b\n").unwrap_err(),
            GraphError::Malformed {
                line: 1,
                text: "a b".into()
            }
        );
        assert_eq!(
            load_graph("a l b x\nb l c x\n").unwrap_err(),
            GraphError::DuplicateEdgeId {
                line: 2,
                id: "x".into()
            }
        );
        assert_eq!(
            load_graph("a l b\nb l c x\n").unwrap_err(),
            GraphError::MixedEdgeIds { line: 2 }
        );
        assert_eq!(
            load_graph("a l b x\nb l c\n").unwrap_err(),
            GraphError::MixedEdgeIds { line: 2 }
        );
        assert!(matches!(
            load_graph("a l b ^x\n").unwrap_err(),
            GraphError::ReservedEdgeId { line: 1, .. }
        ));
        assert!(load_graph("a l b c d\n").is_err());
    }

    #[test]
    fn csr_for_label_a_is_exact() {
        let g = load_graph(CSR_SAMPLE).unwrap();
        let a = g.label_id("a").unwrap();
        let csr = CsrIndex::build(&g, a, Direction::Forward);
        let src: Vec<_> = csr.src.iter().map(|&n| g.node_name(n)).collect();
        assert_eq!(src, ["n1", "n4"]);
        assert_eq!(csr.index, [0, 2, 4]);
        assert_eq!(
            hops(&g, &csr.tgt),
            pairs(&[("n2", "e1"), ("n4", "e3"), ("n1", "e4"), ("n2", "e5")])
        );
    }

    #[test]
    fn csr_for_label_b() {
        let g = load_graph(CSR_SAMPLE).unwrap();
        let b = g.label_id("b").unwrap();
        let csr = CsrIndex::build(&g, b, Direction::Forward);
        let src: Vec<_> = csr.src.iter().map(|&n| g.node_name(n)).collect();
        assert_eq!(src, ["n1", "n3"]);
        assert_eq!(csr.index, [0, 1, 2]);
        assert_eq!(hops(&g, &csr.tgt), pairs(&[("n3", "e2"), ("n4", "e6")]));
    }

    #[test]
    fn csr_for_unknown_label_is_empty() {
        let g = load_graph(CSR_SAMPLE).unwrap();
        let csr = CsrIndex::build(&g, LabelId(7), Direction::Inverse);
        assert!(csr.src.is_empty());
        assert_eq!(csr.index, [0]);
        assert!(csr.tgt.is_empty());
        assert_eq!(
            g.neighbors(NodeId(0), LabelId(7), Direction::Forward)
                .count(),
            0
        );
    }

    #[test]
    fn neighbors_examples() {
        let g = load_graph(CSR_SAMPLE).unwrap();
        let a = g.label_id("a").unwrap();
        let n = |s| g.node_id(s).unwrap();
        let got: Vec<_> = g.neighbors(n("n4"), a, Direction::Forward).collect();
        assert_eq!(hops(&g, &got), pairs(&[("n1", "e4"), ("n2", "e5")]));
        assert_eq!(g.neighbors(n("n3"), a, Direction::Forward).count(), 0);
        let got: Vec<_> = g.neighbors(n("n2"), a, Direction::Inverse).collect();
        assert_eq!(hops(&g, &got), pairs(&[("n1", "e1"), ("n4", "e5")]));
    }

    #[test]
    fn csr_cache_builds_lazily() {
        let mut g = load_graph(CSR_SAMPLE).unwrap();
        assert_eq!(g.csr_usage().0, 0);
        let a = g.label_id("a").unwrap();
        let _ = g.neighbors(NodeId(0), a, Direction::Forward).count();
        assert_eq!(g.csr_usage().0, 1);
        g.set_index_mode(IndexMode::CsrFull);
        assert_eq!(g.csr_usage().0, 4);
    }

    #[test]
    fn render_round_trips() {
        let g = load_graph("node lonely\nx a y\ny b x\nx a y\n").unwrap();
        let h = load_graph(&g.render()).unwrap();
        assert_eq!(h.node_count(), g.node_count());
        assert_eq!(h.edges(), g.edges());
        for i in 0..g.edge_count() as u32 {
            assert_eq!(g.edge_name(EdgeId(i)), h.edge_name(EdgeId(i)));
        }
        for n in g.node_ids() {
            assert_eq!(g.node_name(n), h.node_name(n));
        }
    }
}
