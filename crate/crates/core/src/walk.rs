//! Product-graph search under the WALK restrictor.
//!
//! * [`AnyWalk`] returns one walk per answer node (a shortest one under BFS).
//! * [`AllShortestWalk`] keeps, per product node, the list of same-depth
//!   predecessors. The lists form a DAG from which [`AllPaths`] enumerates
//!   every shortest walk exactly once, given an unambiguous automaton with a
//!   single final state.
//! * [`CountShortest`] replaces the predecessor lists by path counts.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;

use crate::graph::{Direction, EdgeId, GraphDb, NodeId};
use crate::product::{Deadline, Frontier, Path, QueryAutomaton, SearchStats, Strategy};
use crate::regex::StateId;

/// An answer found by an engine: the answer node and the arena record that
/// witnesses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub node: NodeId,
    pub index: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct WalkState {
    pub node: NodeId,
    pub state: StateId,
    pub edge: Option<(EdgeId, Direction)>,
    pub prev: Option<u32>,
}

fn walk_back<S>(
    arena: &[S],
    mut i: u32,
    node: impl Fn(&S) -> NodeId,
    link: impl Fn(&S) -> Option<(u32, EdgeId, Direction)>,
) -> Path {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut dirs = Vec::new();
    loop {
        let s = &arena[i as usize];
        nodes.push(node(s));
        match link(s) {
            Some((prev, e, d)) => {
                edges.push(e);
                dirs.push(d);
                i = prev;
            }
            None => break,
        }
    }
    nodes.reverse();
    edges.reverse();
    dirs.reverse();
    Path {
        nodes,
        edges,
        directions: dirs,
    }
}

/// ANY (SHORTEST) WALK: one walk per answer node, emitted when the node is
/// first reached in a final state.
pub struct AnyWalk<'a> {
    graph: &'a GraphDb,
    automaton: Cow<'a, QueryAutomaton>,
    arena: Vec<WalkState>,
    visited: HashMap<(NodeId, StateId), u32>,
    reached: HashSet<NodeId>,
    open: Frontier,
    pending: std::collections::VecDeque<u32>,
    deadline: Deadline,
    pops: u64,
}

impl<'a> AnyWalk<'a> {
    pub fn new(
        graph: &'a GraphDb,
        automaton: impl Into<Cow<'a, QueryAutomaton>>,
        start: Option<NodeId>,
        strategy: Strategy,
    ) -> Self {
        let automaton = automaton.into();
        let mut s = AnyWalk {
            graph,
            arena: Vec::new(),
            visited: HashMap::new(),
            reached: HashSet::new(),
            open: Frontier::new(strategy),
            pending: Default::default(),
            deadline: Deadline::none(),
            pops: 0,
            automaton,
        };
        if let Some(v) = start.filter(|&v| graph.contains_node(v)) {
            let q0 = s.automaton.initial();
            s.arena.push(WalkState {
                node: v,
                state: q0,
                edge: None,
                prev: None,
            });
            s.visited.insert((v, q0), 0);
            s.open.push(0);
            if s.automaton.accepts_empty() {
                s.reached.insert(v);
                s.pending.push_back(0);
            }
        }
        s
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.deadline = deadline;
        self
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
            let WalkState { node, state, .. } = self.arena[cur as usize];
            for step in self.automaton.out(state) {
                for hop in self.graph.neighbors(node, step.label, step.dir) {
                    let key = (hop.node, step.to);
                    if self.visited.contains_key(&key) {
                        continue;
                    }
                    let idx = self.arena.len() as u32;
                    self.arena.push(WalkState {
                        node: hop.node,
                        state: step.to,
                        edge: Some((hop.edge, step.dir)),
                        prev: Some(cur),
                    });
                    self.visited.insert(key, idx);
                    self.open.push(idx);
                    if self.automaton.is_final(step.to) && self.reached.insert(hop.node) {
                        self.pending.push_back(idx);
                    }
                }
            }
        }
    }

    pub fn path(&self, hit: Hit) -> Path {
        walk_back(
            &self.arena,
            hit.index,
            |s| s.node,
            |s| s.prev.zip(s.edge).map(|(p, (e, d))| (p, e, d)),
        )
    }

    pub fn stats(&self) -> SearchStats {
        SearchStats {
            pops: self.pops,
            states: self.arena.len() as u64,
            arena_bytes: self.arena.len() * std::mem::size_of::<WalkState>(),
        }
    }

    pub fn timed_out(&self) -> bool {
        self.deadline.expired()
    }
}

impl Iterator for AnyWalk<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        let hit = self.next_hit()?;
        Some(self.path(hit))
    }
}

/// Convenience constructor for [`AnyWalk`].
pub fn any_walk<'a>(
    graph: &'a GraphDb,
    automaton: &'a QueryAutomaton,
    start: Option<NodeId>,
    strategy: Strategy,
) -> AnyWalk<'a> {
    AnyWalk::new(graph, automaton, start, strategy)
}

/// Predecessor link: the previous search state and the edge taken from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pred {
    pub prev: u32,
    pub edge: EdgeId,
    pub dir: Direction,
}

#[derive(Debug, Clone)]
pub struct ShortestState {
    pub node: NodeId,
    pub state: StateId,
    pub depth: u32,
    pub preds: Vec<Pred>,
}

/// All shortest paths to one answer node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Group {
    pub node: NodeId,
    pub depth: u32,
    pub index: u32,
}

/// Shared BFS skeleton of [`AllShortestWalk`] and [`CountShortest`].
///
/// Answers are emitted when a final state is popped: by then every
/// same-depth predecessor has been recorded.
struct LayeredBfs<'a, S> {
    graph: &'a GraphDb,
    automaton: Cow<'a, QueryAutomaton>,
    arena: Vec<S>,
    visited: HashMap<(NodeId, StateId), u32>,
    open: Frontier,
    start: Option<NodeId>,
    // zero-length answer announced through the epsilon flag, not by popping
    // a final start state
    empty_pending: bool,
    empty_emitted: bool,
    expand_next: Option<u32>,
    deadline: Deadline,
    pops: u64,
}

trait Layered {
    fn node(&self) -> NodeId;
    fn state(&self) -> StateId;
    fn depth(&self) -> u32;
}

impl Layered for ShortestState {
    fn node(&self) -> NodeId {
        self.node
    }
    fn state(&self) -> StateId {
        self.state
    }
    fn depth(&self) -> u32 {
        self.depth
    }
}

impl<'a, S: Layered> LayeredBfs<'a, S> {
    fn new(
        graph: &'a GraphDb,
        automaton: Cow<'a, QueryAutomaton>,
        start: Option<NodeId>,
        root: impl FnOnce(NodeId, StateId) -> S,
    ) -> Self {
        let start = start.filter(|&v| graph.contains_node(v));
        let mut s = LayeredBfs {
            graph,
            arena: Vec::new(),
            visited: HashMap::new(),
            open: Frontier::new(Strategy::Bfs),
            start,
            empty_pending: false,
            empty_emitted: false,
            expand_next: None,
            deadline: Deadline::none(),
            pops: 0,
            automaton,
        };
        if let Some(v) = start {
            let q0 = s.automaton.initial();
            s.arena.push(root(v, q0));
            s.visited.insert((v, q0), 0);
            s.open.push(0);
            s.empty_pending = s.automaton.accepts_empty() && !s.automaton.is_final(q0);
        }
        s
    }

    /// Pops until a final state worth reporting comes up. `link` is called
    /// for every product edge (current, edge, existing-or-new target).
    fn next_final(
        &mut self,
        mut discover: impl FnMut(&mut Vec<S>, u32, NodeId, StateId, Pred) -> S,
        mut link: impl FnMut(&mut Vec<S>, u32, u32, Pred),
    ) -> Option<u32> {
        if self.empty_pending {
            self.empty_pending = false;
            self.empty_emitted = true;
            return Some(0);
        }
        loop {
            if let Some(cur) = self.expand_next.take() {
                self.expand(cur, &mut discover, &mut link);
            }
            if self.deadline.check() {
                return None;
            }
            let cur = self.open.pop()?;
            self.pops += 1;
            self.expand_next = Some(cur);
            let s = &self.arena[cur as usize];
            if self.automaton.is_final(s.state()) {
                let repeat_of_empty =
                    self.empty_emitted && s.depth() > 0 && Some(s.node()) == self.start;
                if !repeat_of_empty {
                    return Some(cur);
                }
            }
        }
    }

    fn expand(
        &mut self,
        cur: u32,
        discover: &mut impl FnMut(&mut Vec<S>, u32, NodeId, StateId, Pred) -> S,
        link: &mut impl FnMut(&mut Vec<S>, u32, u32, Pred),
    ) {
        let (node, state, depth) = {
            let s = &self.arena[cur as usize];
            (s.node(), s.state(), s.depth())
        };
        for step in self.automaton.out(state) {
            for hop in self.graph.neighbors(node, step.label, step.dir) {
                let pred = Pred {
                    prev: cur,
                    edge: hop.edge,
                    dir: step.dir,
                };
                match self.visited.get(&(hop.node, step.to)) {
                    Some(&existing) => {
                        if self.arena[existing as usize].depth() == depth + 1 {
                            link(&mut self.arena, cur, existing, pred);
                        }
                    }
                    None => {
                        let idx = self.arena.len() as u32;
                        let s = discover(&mut self.arena, cur, hop.node, step.to, pred);
                        self.arena.push(s);
                        self.visited.insert((hop.node, step.to), idx);
                        self.open.push(idx);
                    }
                }
            }
        }
    }

    fn stats(&self) -> SearchStats {
        SearchStats {
            pops: self.pops,
            states: self.arena.len() as u64,
            arena_bytes: self.arena.len() * std::mem::size_of::<S>(),
        }
    }
}

/// ALL SHORTEST WALK. Yields one [`Group`] per answer node in BFS order;
/// [`AllShortestWalk::paths`] enumerates the group's paths.
///
/// Requires an unambiguous automaton with a single final state (or the
/// one-state automaton of [`QueryAutomaton::universal`]); otherwise paths
/// may be reported more than once.
pub struct AllShortestWalk<'a> {
    bfs: LayeredBfs<'a, ShortestState>,
}

impl<'a> AllShortestWalk<'a> {
    pub fn new(
        graph: &'a GraphDb,
        automaton: impl Into<Cow<'a, QueryAutomaton>>,
        start: Option<NodeId>,
    ) -> Self {
        let bfs = LayeredBfs::new(graph, automaton.into(), start, |node, state| {
            ShortestState {
                node,
                state,
                depth: 0,
                preds: Vec::new(),
            }
        });
        AllShortestWalk { bfs }
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.bfs.deadline = deadline;
        self
    }

    pub fn next_group(&mut self) -> Option<Group> {
        let i = self.bfs.next_final(
            |arena, cur, node, state, pred| ShortestState {
                node,
                state,
                depth: arena[cur as usize].depth + 1,
                preds: vec![pred],
            },
            |arena, _, existing, pred| arena[existing as usize].preds.push(pred),
        )?;
        let s = &self.bfs.arena[i as usize];
        Some(Group {
            node: s.node,
            depth: s.depth,
            index: i,
        })
    }

    pub fn arena(&self) -> &[ShortestState] {
        &self.bfs.arena
    }

    pub fn paths(&self, group: Group) -> AllPaths<'_> {
        get_all_paths(&self.bfs.arena, group.index)
    }

    pub fn stats(&self) -> SearchStats {
        self.bfs.stats()
    }

    pub fn timed_out(&self) -> bool {
        self.bfs.deadline.expired()
    }

    /// Drains the search, collecting every group's paths.
    pub fn collect_groups(mut self) -> Vec<(NodeId, Vec<Path>)> {
        let mut out = Vec::new();
        while let Some(g) = self.next_group() {
            out.push((g.node, self.paths(g).collect()));
        }
        out
    }
}

impl Iterator for AllShortestWalk<'_> {
    type Item = Group;

    fn next(&mut self) -> Option<Group> {
        self.next_group()
    }
}

/// Convenience constructor for [`AllShortestWalk`].
pub fn all_shortest_walk<'a>(
    graph: &'a GraphDb,
    automaton: &'a QueryAutomaton,
    start: Option<NodeId>,
) -> AllShortestWalk<'a> {
    AllShortestWalk::new(graph, automaton, start)
}

/// All shortest paths from `start` ignoring labels, grouped per reached node.
pub fn enumerate_all_shortest_unlabeled(graph: &GraphDb, start: NodeId) -> AllShortestWalk<'_> {
    AllShortestWalk::new(graph, QueryAutomaton::universal(graph), Some(start))
}

/// Resumable depth-first walk over the predecessor DAG.
///
/// The stack holds one frame per DAG node on the current path, target at
/// the bottom, each with the predecessor currently chosen. Advancing pops
/// exhausted frames and re-descends from the deepest frame with another
/// choice, so the work per path is bounded by its length.
#[derive(Debug, Clone)]
pub struct PathCursor {
    target: u32,
    stack: Vec<(u32, u32)>,
    started: bool,
    steps: u64,
}

impl PathCursor {
    pub fn new(target: u32) -> Self {
        PathCursor {
            target,
            stack: Vec::new(),
            started: false,
            steps: 0,
        }
    }

    /// Stack pushes plus pops performed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn descend(&mut self, arena: &[ShortestState]) {
        while let Some(&(idx, choice)) = self.stack.last() {
            let preds = &arena[idx as usize].preds;
            if preds.is_empty() {
                break;
            }
            self.stack.push((preds[choice as usize].prev, 0));
            self.steps += 1;
        }
    }

    pub fn next_path(&mut self, arena: &[ShortestState]) -> Option<Path> {
        if !self.started {
            self.started = true;
            self.stack.push((self.target, 0));
            self.steps += 1;
            self.descend(arena);
        } else {
            loop {
                let &mut (idx, ref mut choice) = self.stack.last_mut()?;
                if (*choice as usize) + 1 < arena[idx as usize].preds.len() {
                    *choice += 1;
                    break;
                }
                self.stack.pop();
                self.steps += 1;
            }
            self.descend(arena);
        }

        let mut path = Path::empty(arena[self.stack.last()?.0 as usize].node);
        for &(idx, choice) in self.stack.iter().rev().skip(1) {
            let s = &arena[idx as usize];
            let p = s.preds[choice as usize];
            path.push(p.edge, p.dir, s.node);
        }
        Some(path)
    }
}

/// Every path from the root of `arena` to state `index`, each exactly once.
pub struct AllPaths<'a> {
    arena: &'a [ShortestState],
    cursor: PathCursor,
}

impl AllPaths<'_> {
    pub fn steps(&self) -> u64 {
        self.cursor.steps()
    }
}

impl Iterator for AllPaths<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        self.cursor.next_path(self.arena)
    }
}

pub fn get_all_paths(arena: &[ShortestState], index: u32) -> AllPaths<'_> {
    AllPaths {
        arena,
        cursor: PathCursor::new(index),
    }
}

#[derive(Debug, Clone)]
pub struct CountState {
    pub node: NodeId,
    pub state: StateId,
    pub depth: u32,
    pub num_paths: BigUint,
}

impl Layered for CountState {
    fn node(&self) -> NodeId {
        self.node
    }
    fn state(&self) -> StateId {
        self.state
    }
    fn depth(&self) -> u32 {
        self.depth
    }
}

/// Number of shortest witnessing paths per answer node. Same automaton
/// requirements as [`AllShortestWalk`].
pub struct CountShortest<'a> {
    bfs: LayeredBfs<'a, CountState>,
}

impl<'a> CountShortest<'a> {
    pub fn new(
        graph: &'a GraphDb,
        automaton: impl Into<Cow<'a, QueryAutomaton>>,
        start: Option<NodeId>,
    ) -> Self {
        let bfs = LayeredBfs::new(graph, automaton.into(), start, |node, state| CountState {
            node,
            state,
            depth: 0,
            num_paths: BigUint::from(1u32),
        });
        CountShortest { bfs }
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.bfs.deadline = deadline;
        self
    }

    pub fn stats(&self) -> SearchStats {
        self.bfs.stats()
    }

    pub fn timed_out(&self) -> bool {
        self.bfs.deadline.expired()
    }
}

impl Iterator for CountShortest<'_> {
    type Item = (NodeId, BigUint);

    fn next(&mut self) -> Option<(NodeId, BigUint)> {
        let i = self.bfs.next_final(
            |arena, cur, node, state, _| {
                let c = &arena[cur as usize];
                CountState {
                    node,
                    state,
                    depth: c.depth + 1,
                    num_paths: c.num_paths.clone(),
                }
            },
            |arena, cur, existing, _| {
                let add = arena[cur as usize].num_paths.clone();
                arena[existing as usize].num_paths += add;
            },
        )?;
        let s = &self.bfs.arena[i as usize];
        Some((s.node, s.num_paths.clone()))
    }
}

pub fn count_shortest<'a>(
    graph: &'a GraphDb,
    automaton: &'a QueryAutomaton,
    start: Option<NodeId>,
) -> CountShortest<'a> {
    CountShortest::new(graph, automaton, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;
    use crate::regex::{glushkov, parse_regex, single_final};

    fn automaton(g: &GraphDb, regex: &str) -> QueryAutomaton {
        let nfa = single_final(&glushkov(&parse_regex(regex).unwrap()));
        QueryAutomaton::bind(&nfa, g)
    }

    fn edge_names(g: &GraphDb, p: &Path) -> Vec<String> {
        p.edges.iter().map(|&e| g.edge_name(e).to_owned()).collect()
    }

    const DAG: &str = "v x n1\nv x n2\nv x n3\nn1 x n4\nn2 x n4\nn3 x n4\nn4 x n5\n";

    #[test]
    fn nonexistent_start_is_empty() {
        let g = load_graph("a x b\n").unwrap();
        let aut = automaton(&g, "x*");
        assert_eq!(any_walk(&g, &aut, None, Strategy::Bfs).count(), 0);
        assert_eq!(all_shortest_walk(&g, &aut, None).count(), 0);
        assert_eq!(count_shortest(&g, &aut, None).count(), 0);
        assert_eq!(
            any_walk(&g, &aut, Some(NodeId(99)), Strategy::Dfs).count(),
            0
        );
    }

    #[test]
    fn zero_length_answer_comes_first() {
        let g = load_graph("a x b\nb x a\n").unwrap();
        let aut = automaton(&g, "x*");
        let a = g.node_id("a");
        let first = any_walk(&g, &aut, a, Strategy::Bfs).next().unwrap();
        assert_eq!(first, Path::empty(a.unwrap()));
        let groups = all_shortest_walk(&g, &aut, a).collect_groups();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], (a.unwrap(), vec![Path::empty(a.unwrap())]));
        let counts: Vec<_> = count_shortest(&g, &aut, a).collect();
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[0], (a.unwrap(), BigUint::from(1u32)));
    }

    #[test]
    fn single_edge() {
        let g = load_graph("v a w\n").unwrap();
        let aut = automaton(&g, "a");
        let groups = all_shortest_walk(&g, &aut, g.node_id("v")).collect_groups();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].0, g.node_id("w").unwrap());
        assert_eq!(groups[0].1.len(), 1);
        let counts: Vec<_> = count_shortest(&g, &aut, g.node_id("v")).collect();
        assert_eq!(counts, [(g.node_id("w").unwrap(), BigUint::from(1u32))]);
    }

    #[test]
    fn dag_enumeration_from_predecessor_lists() {
        let g = load_graph(DAG).unwrap();
        let n = |s| g.node_id(s).unwrap();
        let mut search = enumerate_all_shortest_unlabeled(&g, n("v"));
        let mut by_node = HashMap::new();
        while let Some(group) = search.next_group() {
            let paths: Vec<Path> = search.paths(group).collect();
            by_node.insert(group.node, (group.index, paths));
        }
        let (n4_idx, n4_paths) = &by_node[&n("n4")];
        let preds: Vec<_> = search.arena()[*n4_idx as usize]
            .preds
            .iter()
            .map(|p| search.arena()[p.prev as usize].node)
            .collect();
        assert_eq!(preds, [n("n1"), n("n2"), n("n3")]);
        let routes: Vec<Vec<NodeId>> = n4_paths.iter().map(|p| p.nodes.clone()).collect();
        assert_eq!(
            routes,
            [
                vec![n("v"), n("n1"), n("n4")],
                vec![n("v"), n("n2"), n("n4")],
                vec![n("v"), n("n3"), n("n4")]
            ]
        );
        let (_, n5_paths) = &by_node[&n("n5")];
        assert_eq!(n5_paths.len(), 3);
        for (p5, p4) in n5_paths.iter().zip(n4_paths) {
            assert_eq!(&p5.nodes[..3], &p4.nodes[..]);
            assert_eq!(p5.len(), 3);
        }
        assert_eq!(by_node[&n("v")].1, [Path::empty(n("v"))]);
    }

    #[test]
    fn cursor_on_start_state_yields_empty_path() {
        let g = load_graph(DAG).unwrap();
        let mut search = enumerate_all_shortest_unlabeled(&g, g.node_id("v").unwrap());
        while search.next_group().is_some() {}
        let mut it = get_all_paths(search.arena(), 0);
        assert_eq!(it.next(), Some(Path::empty(g.node_id("v").unwrap())));
        assert_eq!(it.next(), None);
        assert_eq!(it.steps(), 2);
    }

    #[test]
    fn dag_counts() {
        let g = load_graph(DAG).unwrap();
        let aut = automaton(&g, "x*");
        let counts: HashMap<_, _> = count_shortest(&g, &aut, g.node_id("v")).collect();
        assert_eq!(counts[&g.node_id("n4").unwrap()], BigUint::from(3u32));
        assert_eq!(counts[&g.node_id("n5").unwrap()], BigUint::from(3u32));
    }

    #[test]
    fn any_walk_shortest_loops_back() {
        let g = load_graph(
            "John knows Joe e1\nJoe knows John e2\nJoe knows Paul e3\nPaul knows Anne e5\n\
             John lives Rome e8\nAnne lives Rome e9\n",
        )
        .unwrap();
        let aut = automaton(&g, "knows+/lives");
        let paths: Vec<_> = any_walk(&g, &aut, g.node_id("John"), Strategy::Bfs).collect();
        assert_eq!(paths.len(), 1);
        assert_eq!(edge_names(&g, &paths[0]), ["e1", "e2", "e8"]);
    }

    #[test]
    fn pops_bounded_by_product_size() {
        let g = load_graph("a x b\nb x c\nc x a\na x c\nc y b\n").unwrap();
        let aut = automaton(&g, "(x|y)*/y/x*");
        let mut s = all_shortest_walk(&g, &aut, g.node_id("a"));
        while s.next_group().is_some() {}
        assert!(s.stats().pops <= (aut.num_states() * g.node_count()) as u64);
        for st in s.arena().iter().skip(1) {
            assert!(!st.preds.is_empty());
            for p in &st.preds {
                assert_eq!(s.arena()[p.prev as usize].depth + 1, st.depth);
            }
        }
    }
}
