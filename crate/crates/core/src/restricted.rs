//! Path enumeration under the TRAIL, SIMPLE and ACYCLIC restrictors.
//!
//! Every search state is a distinct path prefix, so the search is
//! exponential in the worst case. A candidate extension is checked against
//! the base-graph path spelled by its prefix chain.

use std::borrow::Cow;
use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{Direction, EdgeId, GraphDb, NodeId};
use crate::product::{Deadline, Frontier, Path, QueryAutomaton, SearchStats, Strategy};
use crate::regex::StateId;
use crate::walk::Hit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Restrictor {
    Walk,
    Trail,
    Simple,
    Acyclic,
}

impl fmt::Display for Restrictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Restrictor::Walk => "walk",
            Restrictor::Trail => "trail",
            Restrictor::Simple => "simple",
            Restrictor::Acyclic => "acyclic",
        })
    }
}

impl FromStr for Restrictor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "walk" => Ok(Restrictor::Walk),
            "trail" => Ok(Restrictor::Trail),
            "simple" => Ok(Restrictor::Simple),
            "acyclic" => Ok(Restrictor::Acyclic),
            _ => Err(format!("unknown restrictor {s:?}")),
        }
    }
}

impl Restrictor {
    /// Checks a complete path directly.
    pub fn admits(self, path: &Path) -> bool {
        match self {
            Restrictor::Walk => true,
            Restrictor::Trail => {
                let mut seen = HashSet::new();
                path.edges.iter().all(|e| seen.insert(*e))
            }
            Restrictor::Acyclic => {
                let mut seen = HashSet::new();
                path.nodes.iter().all(|n| seen.insert(*n))
            }
            Restrictor::Simple => {
                let inner = if !path.is_empty() && path.start() == path.end() {
                    &path.nodes[..path.nodes.len() - 1]
                } else {
                    &path.nodes[..]
                };
                let mut seen = HashSet::new();
                inner.iter().all(|n| seen.insert(*n))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("the restricted engine does not evaluate WALK")]
    WalkRestrictor,
    #[error("shortest selectors need breadth-first search")]
    ShortestNeedsBfs,
}

#[derive(Debug, Clone, Copy)]
pub struct RestrictedState {
    pub node: NodeId,
    pub state: StateId,
    pub depth: u32,
    pub edge: Option<(EdgeId, Direction)>,
    pub prev: Option<u32>,
}

/// Whether appending `(next_node, next_edge)` to the path ending at
/// `prefix` keeps it admissible under `restrictor`.
pub fn is_valid(
    arena: &[RestrictedState],
    prefix: u32,
    next_node: NodeId,
    next_edge: EdgeId,
    restrictor: Restrictor,
) -> bool {
    let chain = std::iter::successors(Some(&arena[prefix as usize]), |s| {
        s.prev.map(|p| &arena[p as usize])
    });
    match restrictor {
        Restrictor::Walk => true,
        Restrictor::Trail => chain.filter_map(|s| s.edge).all(|(e, _)| e != next_edge),
        Restrictor::Acyclic => chain.map(|s| s.node).all(|n| n != next_node),
        Restrictor::Simple => {
            let head = &arena[prefix as usize];
            let mut root = head.node;
            for s in chain {
                if s.prev.is_some() && s.node == next_node {
                    return false;
                }
                root = s.node;
            }
            // a path that is back at its start is closed
            !(head.depth > 0 && head.node == root)
        }
    }
}

#[derive(Debug)]
enum Mode {
    All,
    AllShortest(HashMap<NodeId, u32>),
    Any(HashSet<NodeId>),
}

/// Search over restricted paths; see [`all_restricted`] and
/// [`any_restricted`]. Answers are emitted when a path is extended into a
/// final state.
pub struct RestrictedSearch<'a> {
    graph: &'a GraphDb,
    automaton: Cow<'a, QueryAutomaton>,
    restrictor: Restrictor,
    mode: Mode,
    arena: Vec<RestrictedState>,
    open: Frontier,
    pending: VecDeque<u32>,
    deadline: Deadline,
    pops: u64,
}

impl<'a> RestrictedSearch<'a> {
    fn new(
        graph: &'a GraphDb,
        automaton: Cow<'a, QueryAutomaton>,
        start: Option<NodeId>,
        restrictor: Restrictor,
        mut mode: Mode,
        strategy: Strategy,
    ) -> Result<Self, EngineError> {
        if restrictor == Restrictor::Walk {
            return Err(EngineError::WalkRestrictor);
        }
        let shortest = match &mode {
            Mode::AllShortest(_) => true,
            Mode::Any(_) | Mode::All => false,
        };
        if shortest && strategy != Strategy::Bfs {
            return Err(EngineError::ShortestNeedsBfs);
        }
        let mut s = RestrictedSearch {
            graph,
            restrictor,
            arena: Vec::new(),
            open: Frontier::new(strategy),
            pending: VecDeque::new(),
            deadline: Deadline::none(),
            pops: 0,
            mode: Mode::All,
            automaton,
        };
        if let Some(v) = start.filter(|&v| graph.contains_node(v)) {
            s.arena.push(RestrictedState {
                node: v,
                state: s.automaton.initial(),
                depth: 0,
                edge: None,
                prev: None,
            });
            s.open.push(0);
            if s.automaton.accepts_empty() {
                match &mut mode {
                    Mode::All => {}
                    Mode::AllShortest(reached) => {
                        reached.insert(v, 0);
                    }
                    Mode::Any(reached) => {
                        reached.insert(v);
                    }
                }
                s.pending.push_back(0);
            }
        }
        s.mode = mode;
        Ok(s)
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.deadline = deadline;
        self
    }

    fn accept(mode: &mut Mode, node: NodeId, depth: u32) -> bool {
        match mode {
            Mode::All => true,
            Mode::AllShortest(reached) => match reached.entry(node) {
                Entry::Vacant(v) => {
                    v.insert(depth);
                    true
                }
                Entry::Occupied(o) => *o.get() == depth,
            },
            Mode::Any(reached) => reached.insert(node),
        }
    }

    pub fn next_hit(&mut self) -> Option<Hit> {
        loop {
            if let Some(i) = self.pending.pop_front() {
                return Some(Hit {
                    node: self.arena[i as usize].node,
                    index: i,
                });
            }
            if self.deadline.check() {
                return None;
            }
            let cur = self.open.pop()?;
            self.pops += 1;
            let RestrictedState {
                node, state, depth, ..
            } = self.arena[cur as usize];
            for step in self.automaton.out(state) {
                for hop in self.graph.neighbors(node, step.label, step.dir) {
                    if !is_valid(&self.arena, cur, hop.node, hop.edge, self.restrictor) {
                        continue;
                    }
                    let idx = self.arena.len() as u32;
                    self.arena.push(RestrictedState {
                        node: hop.node,
                        state: step.to,
                        depth: depth + 1,
                        edge: Some((hop.edge, step.dir)),
                        prev: Some(cur),
                    });
                    self.open.push(idx);
                    if self.automaton.is_final(step.to)
                        && Self::accept(&mut self.mode, hop.node, depth + 1)
                    {
                        self.pending.push_back(idx);
                    }
                }
            }
        }
    }

    pub fn path(&self, hit: Hit) -> Path {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut directions = Vec::new();
        let mut i = Some(hit.index);
        while let Some(k) = i {
            let s = &self.arena[k as usize];
            nodes.push(s.node);
            if let Some((e, d)) = s.edge {
                edges.push(e);
                directions.push(d);
            }
            i = s.prev;
        }
        nodes.reverse();
        edges.reverse();
        directions.reverse();
        Path {
            nodes,
            edges,
            directions,
        }
    }

    pub fn arena(&self) -> &[RestrictedState] {
        &self.arena
    }

    pub fn stats(&self) -> SearchStats {
        SearchStats {
            pops: self.pops,
            states: self.arena.len() as u64,
            arena_bytes: self.arena.len() * std::mem::size_of::<RestrictedState>(),
        }
    }

    pub fn timed_out(&self) -> bool {
        self.deadline.expired()
    }
}

impl Iterator for RestrictedSearch<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        let hit = self.next_hit()?;
        Some(self.path(hit))
    }
}

/// ALL or ALL SHORTEST paths under `restrictor`. Each path is reported once
/// when the automaton is unambiguous.
pub fn all_restricted<'a>(
    graph: &'a GraphDb,
    automaton: impl Into<Cow<'a, QueryAutomaton>>,
    start: Option<NodeId>,
    restrictor: Restrictor,
    all_shortest: bool,
    strategy: Strategy,
) -> Result<RestrictedSearch<'a>, EngineError> {
    let mode = if all_shortest {
        Mode::AllShortest(HashMap::new())
    } else {
        Mode::All
    };
    RestrictedSearch::new(graph, automaton.into(), start, restrictor, mode, strategy)
}

/// One path per answer node under `restrictor`; shortest when `shortest`
/// (which requires BFS).
pub fn any_restricted<'a>(
    graph: &'a GraphDb,
    automaton: impl Into<Cow<'a, QueryAutomaton>>,
    start: Option<NodeId>,
    restrictor: Restrictor,
    shortest: bool,
    strategy: Strategy,
) -> Result<RestrictedSearch<'a>, EngineError> {
    if shortest && strategy != Strategy::Bfs {
        return Err(EngineError::ShortestNeedsBfs);
    }
    RestrictedSearch::new(
        graph,
        automaton.into(),
        start,
        restrictor,
        Mode::Any(HashSet::new()),
        strategy,
    )
}
