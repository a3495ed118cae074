//! Exhaustive reference enumeration for small instances.
//!
//! Paths are built by recursive search over the raw edge list, and label
//! words are checked by simulating the [`Nfa`] on state sets. Nothing here
//! goes through CSR indexes, bound automata or the search engines.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::graph::{Direction, GraphDb, NodeId};
use crate::product::Path;
use crate::regex::{Nfa, StateId};
use crate::restricted::Restrictor;

pub const MAX_WALK_PRODUCT: usize = 512;
pub const MAX_WALK_LEN: usize = 12;
pub const MAX_RESTRICTED_EDGES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("WALK enumeration needs a length bound")]
    Unbounded,
}

/// A duplicate-free set of paths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleResult {
    pub paths: BTreeSet<Path>,
}

impl OracleResult {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn endpoints(&self) -> BTreeSet<NodeId> {
        self.paths.iter().map(Path::end).collect()
    }

    pub fn by_endpoint(&self) -> BTreeMap<NodeId, Vec<Path>> {
        let mut out: BTreeMap<NodeId, Vec<Path>> = BTreeMap::new();
        for p in &self.paths {
            out.entry(p.end()).or_default().push(p.clone());
        }
        out
    }

    pub fn shortest_len(&self, node: NodeId) -> Option<usize> {
        self.paths
            .iter()
            .filter(|p| p.end() == node)
            .map(Path::len)
            .min()
    }

    /// Keeps, per endpoint, only the paths of minimum length.
    pub fn shortest(&self) -> OracleResult {
        let mut best: HashMap<NodeId, usize> = HashMap::new();
        for p in &self.paths {
            let b = best.entry(p.end()).or_insert(p.len());
            *b = (*b).min(p.len());
        }
        OracleResult {
            paths: self
                .paths
                .iter()
                .filter(|p| best[&p.end()] == p.len())
                .cloned()
                .collect(),
        }
    }
}

struct Simulator<'a> {
    nfa: &'a Nfa,
    // graph label id -> nfa alphabet index
    labels: Vec<Option<u32>>,
}

impl<'a> Simulator<'a> {
    fn new(graph: &GraphDb, nfa: &'a Nfa) -> Self {
        let labels = graph
            .label_ids()
            .map(|l| {
                let name = graph.label_name(l);
                nfa.alphabet()
                    .iter()
                    .position(|a| a == name)
                    .map(|i| i as u32)
            })
            .collect();
        Simulator { nfa, labels }
    }

    fn initial(&self) -> Vec<StateId> {
        vec![self.nfa.initial()]
    }

    fn step(&self, set: &[StateId], label: usize, dir: Direction) -> Vec<StateId> {
        let Some(sym) = self.labels[label] else {
            return Vec::new();
        };
        let mut next: Vec<StateId> = set
            .iter()
            .flat_map(|&q| self.nfa.out(q))
            .filter(|t| t.symbol.label == sym && t.symbol.dir == dir)
            .map(|t| t.to)
            .collect();
        next.sort_unstable();
        next.dedup();
        next
    }

    fn accepting(&self, set: &[StateId], len: usize) -> bool {
        if len == 0 {
            self.nfa.accepts_empty()
        } else {
            set.iter().any(|&q| self.nfa.is_final(q))
        }
    }
}

/// Every single-edge move from `node`: `(edge index, direction, target)`.
fn moves(graph: &GraphDb, node: NodeId) -> Vec<(usize, Direction, NodeId)> {
    let mut out = Vec::new();
    for (i, e) in graph.edges().iter().enumerate() {
        if e.from == node {
            out.push((i, Direction::Forward, e.to));
        }
        if e.to == node {
            out.push((i, Direction::Inverse, e.from));
        }
    }
    out
}

/// All paths from `start` admissible under `restrictor` whose label word is
/// accepted by `nfa`. WALK needs `max_len`; the other restrictors ignore it.
pub fn oracle_enumerate(
    graph: &GraphDb,
    nfa: &Nfa,
    start: NodeId,
    restrictor: Restrictor,
    max_len: Option<usize>,
) -> Result<OracleResult, OracleError> {
    let bound = match restrictor {
        Restrictor::Walk => {
            let max_len = max_len.ok_or(OracleError::Unbounded)?;
            let product = graph.node_count() * nfa.num_states();
            if product > MAX_WALK_PRODUCT {
                return Err(OracleError::TooLarge(format!(
                    "|V|*|Q| = {product} > {MAX_WALK_PRODUCT}"
                )));
            }
            if max_len > MAX_WALK_LEN {
                return Err(OracleError::TooLarge(format!(
                    "max_len {max_len} > {MAX_WALK_LEN}"
                )));
            }
            max_len
        }
        _ => {
            if graph.edge_count() > MAX_RESTRICTED_EDGES {
                return Err(OracleError::TooLarge(format!(
                    "|E| = {} > {MAX_RESTRICTED_EDGES}",
                    graph.edge_count()
                )));
            }
            usize::MAX
        }
    };
    let mut result = OracleResult::default();
    if !graph.contains_node(start) {
        return Ok(result);
    }
    let sim = Simulator::new(graph, nfa);
    let adjacency: Vec<_> = graph.node_ids().map(|v| moves(graph, v)).collect();
    let mut search = Search {
        graph,
        sim: &sim,
        adjacency: &adjacency,
        restrictor,
        bound,
        out: &mut result.paths,
    };
    search.extend(&mut Path::empty(start), sim.initial());
    Ok(result)
}

struct Search<'a> {
    graph: &'a GraphDb,
    sim: &'a Simulator<'a>,
    adjacency: &'a [Vec<(usize, Direction, NodeId)>],
    restrictor: Restrictor,
    bound: usize,
    out: &'a mut BTreeSet<Path>,
}

impl Search<'_> {
    fn admissible(&self, path: &Path, edge: usize, to: NodeId) -> bool {
        match self.restrictor {
            Restrictor::Walk => true,
            Restrictor::Trail => !path.edges.iter().any(|e| e.index() == edge),
            Restrictor::Acyclic => !path.nodes.contains(&to),
            Restrictor::Simple => {
                let closed = !path.is_empty() && path.end() == path.start();
                !closed && (to == path.start() || !path.nodes.contains(&to))
            }
        }
    }

    fn extend(&mut self, path: &mut Path, set: Vec<StateId>) {
        if self.sim.accepting(&set, path.len()) {
            self.out.insert(path.clone());
        }
        if path.len() >= self.bound {
            return;
        }
        for &(edge, dir, to) in &self.adjacency[path.end().index()] {
            if !self.admissible(path, edge, to) {
                continue;
            }
            let label = self.graph.edges()[edge].label.index();
            let next = self.sim.step(&set, label, dir);
            if next.is_empty() {
                continue;
            }
            path.push(crate::graph::EdgeId(edge as u32), dir, to);
            self.extend(path, next);
            path.nodes.pop();
            path.edges.pop();
            path.directions.pop();
        }
    }
}

/// All shortest matching walks from `start`, per endpoint.
///
/// Expands walks level by level, keeping a walk only while its
/// `(node, state set)` pair is at the depth where that pair was first
/// reached. Every prefix of a shortest matching walk has this property
/// (otherwise swapping in the earlier prefix would give a shorter one), so
/// no shortest walk is lost.
pub fn oracle_shortest_walks(
    graph: &GraphDb,
    nfa: &Nfa,
    start: NodeId,
) -> Result<OracleResult, OracleError> {
    let product = graph.node_count() * nfa.num_states();
    if product > MAX_WALK_PRODUCT {
        return Err(OracleError::TooLarge(format!(
            "|V|*|Q| = {product} > {MAX_WALK_PRODUCT}"
        )));
    }
    let mut accepted = OracleResult::default();
    if !graph.contains_node(start) {
        return Ok(accepted);
    }
    let sim = Simulator::new(graph, nfa);
    let adjacency: Vec<_> = graph.node_ids().map(|v| moves(graph, v)).collect();
    let mut first_hit: HashMap<(NodeId, Vec<StateId>), usize> = HashMap::new();
    let mut level = vec![(Path::empty(start), sim.initial())];
    first_hit.insert((start, sim.initial()), 0);
    let mut depth = 0;
    while !level.is_empty() {
        let mut next_level = Vec::new();
        for (path, set) in level {
            if sim.accepting(&set, depth) {
                accepted.paths.insert(path.clone());
            }
            for &(edge, dir, to) in &adjacency[path.end().index()] {
                let label = graph.edges()[edge].label.index();
                let next = sim.step(&set, label, dir);
                if next.is_empty() {
                    continue;
                }
                let hit = *first_hit.entry((to, next.clone())).or_insert(depth + 1);
                if hit == depth + 1 {
                    let mut p = path.clone();
                    p.push(crate::graph::EdgeId(edge as u32), dir, to);
                    next_level.push((p, next));
                }
            }
        }
        level = next_level;
        depth += 1;
    }
    Ok(accepted.shortest())
}
