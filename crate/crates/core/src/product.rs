//! Pieces shared by the traversal engines: an automaton bound to a graph's
//! label ids, the path type, traversal strategy and run counters.
//!
//! The product of graph and automaton is never materialized. Engines ask
//! [`QueryAutomaton::out`] for the transitions of a state and the graph for
//! the matching neighbors.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use crate::graph::{Direction, EdgeId, GraphDb, LabelId, NodeId};
use crate::regex::{Nfa, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Bfs,
    Dfs,
}

/// One automaton move: read `label` in `dir`, go to state `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub label: LabelId,
    pub dir: Direction,
    pub to: StateId,
}

/// An ε-free automaton whose symbols are resolved against one graph.
///
/// Transitions on labels the graph does not have are dropped, as are
/// transitions into states that cannot reach a final state.
#[derive(Debug, Clone)]
pub struct QueryAutomaton {
    out: Vec<Vec<Step>>,
    finals: Vec<bool>,
    initial: StateId,
    accepts_empty: bool,
    unknown_labels: Vec<String>,
}

impl QueryAutomaton {
    pub fn bind(nfa: &Nfa, graph: &GraphDb) -> QueryAutomaton {
        let resolved: Vec<Option<LabelId>> =
            nfa.alphabet().iter().map(|l| graph.label_id(l)).collect();
        let unknown_labels = nfa
            .alphabet()
            .iter()
            .zip(&resolved)
            .filter(|(_, r)| r.is_none())
            .map(|(l, _)| l.clone())
            .collect();

        let n = nfa.num_states();
        let mut out: Vec<Vec<Step>> = vec![Vec::new(); n];
        for t in nfa.transitions() {
            if let Some(label) = resolved[t.symbol.label as usize] {
                out[t.from as usize].push(Step {
                    label,
                    dir: t.symbol.dir,
                    to: t.to,
                });
            }
        }

        // keep only transitions into co-accessible states
        let finals: Vec<bool> = (0..n as StateId).map(|q| nfa.is_final(q)).collect();
        let mut live = finals.clone();
        loop {
            let mut changed = false;
            for q in 0..n {
                if !live[q] && out[q].iter().any(|s| live[s.to as usize]) {
                    live[q] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for steps in &mut out {
            steps.retain(|s| live[s.to as usize]);
            steps.sort_unstable();
        }

        QueryAutomaton {
            out,
            finals,
            initial: nfa.initial(),
            accepts_empty: nfa.accepts_empty(),
            unknown_labels,
        }
    }

    /// One state, final and initial, looping on every forward label: accepts
    /// every label word, so the product is the plain graph.
    pub fn universal(graph: &GraphDb) -> QueryAutomaton {
        let steps = graph
            .label_ids()
            .map(|label| Step {
                label,
                dir: Direction::Forward,
                to: 0,
            })
            .collect();
        QueryAutomaton {
            out: vec![steps],
            finals: vec![true],
            initial: 0,
            accepts_empty: true,
            unknown_labels: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.out.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn accepts_empty(&self) -> bool {
        self.accepts_empty
    }

    pub fn out(&self, q: StateId) -> &[Step] {
        &self.out[q as usize]
    }

    /// Regex labels missing from the graph.
    pub fn unknown_labels(&self) -> &[String] {
        &self.unknown_labels
    }

    pub fn final_count(&self) -> usize {
        self.finals.iter().filter(|&&f| f).count()
    }
}

impl<'a> From<&'a QueryAutomaton> for Cow<'a, QueryAutomaton> {
    fn from(a: &'a QueryAutomaton) -> Self {
        Cow::Borrowed(a)
    }
}

impl From<QueryAutomaton> for Cow<'_, QueryAutomaton> {
    fn from(a: QueryAutomaton) -> Self {
        Cow::Owned(a)
    }
}

/// A path in the base graph: `nodes[i] -edges[i]-> nodes[i + 1]`, each edge
/// traversed in `directions[i]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub directions: Vec<Direction>,
}

impl Path {
    pub fn empty(node: NodeId) -> Path {
        Path {
            nodes: vec![node],
            edges: Vec::new(),
            directions: Vec::new(),
        }
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("path has at least one node")
    }

    pub fn push(&mut self, edge: EdgeId, dir: Direction, node: NodeId) {
        self.edges.push(edge);
        self.directions.push(dir);
        self.nodes.push(node);
    }

    pub fn label_word(&self, graph: &GraphDb) -> Vec<(LabelId, Direction)> {
        self.edges
            .iter()
            .zip(&self.directions)
            .map(|(&e, &d)| (graph.edge(e).label, d))
            .collect()
    }

    /// Label word with label names, as accepted by [`Nfa::accepts`].
    pub fn named_word<'g>(&self, graph: &'g GraphDb) -> Vec<(&'g str, Direction)> {
        self.label_word(graph)
            .into_iter()
            .map(|(l, d)| (graph.label_name(l), d))
            .collect()
    }

    /// Every edge connects consecutive nodes in its direction.
    pub fn is_consistent(&self, graph: &GraphDb) -> bool {
        self.nodes.len() == self.edges.len() + 1
            && self.directions.len() == self.edges.len()
            && self.edges.iter().enumerate().all(|(i, &e)| {
                let edge = graph.edge(e);
                let d = self.directions[i];
                edge.source(d) == self.nodes[i] && edge.target(d) == self.nodes[i + 1]
            })
    }

    /// Number of values written when rendering: nodes plus edges.
    pub fn output_size(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }

    pub fn display<'a>(&'a self, graph: &'a GraphDb) -> PathDisplay<'a> {
        PathDisplay { path: self, graph }
    }
}

/// Renders `John -e1-> Joe <-e4- Lily`.
pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a GraphDb,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.path;
        f.write_str(self.graph.node_name(p.nodes[0]))?;
        for i in 0..p.edges.len() {
            let e = self.graph.edge_name(p.edges[i]);
            match p.directions[i] {
                Direction::Forward => write!(f, " -{e}-> ")?,
                Direction::Inverse => write!(f, " <-{e}- ")?,
            }
            f.write_str(self.graph.node_name(p.nodes[i + 1]))?;
        }
        Ok(())
    }
}

/// Counters reported by every engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Frontier pops.
    pub pops: u64,
    /// Search states created (arena length).
    pub states: u64,
    /// Approximate arena footprint.
    pub arena_bytes: usize,
}

/// Optional wall-clock deadline, polled once per frontier pop.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deadline {
    at: Option<Instant>,
    expired: bool,
}

impl Deadline {
    pub fn new(at: Option<Instant>) -> Self {
        Deadline { at, expired: false }
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// Checks the clock; once expired, stays expired.
    pub fn check(&mut self) -> bool {
        if !self.expired {
            if let Some(at) = self.at {
                self.expired = Instant::now() >= at;
            }
        }
        self.expired
    }

    pub fn expired(&self) -> bool {
        self.expired
    }
}

/// Queue (BFS) or stack (DFS) of arena indices.
#[derive(Debug)]
pub(crate) struct Frontier {
    items: VecDeque<u32>,
    strategy: Strategy,
}

impl Frontier {
    pub(crate) fn new(strategy: Strategy) -> Self {
        Frontier {
            items: VecDeque::new(),
            strategy,
        }
    }

    pub(crate) fn push(&mut self, i: u32) {
        self.items.push_back(i);
    }

    pub(crate) fn pop(&mut self) -> Option<u32> {
        match self.strategy {
            Strategy::Bfs => self.items.pop_front(),
            Strategy::Dfs => self.items.pop_back(),
        }
    }
}
