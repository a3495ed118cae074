//! Query planning and streaming execution.
//!
//! [`plan_query`] validates a [`QuerySpec`] against the selector/restrictor
//! matrix, prepares the automaton the chosen engine needs and resolves node
//! names. [`ResultStream`] pulls records out of the engine one at a time;
//! [`execute`] drives a stream into a [`Sink`] and reports what happened.

use std::error::Error as StdError;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::{GraphDb, NodeId};
use crate::product::{Deadline, Path, QueryAutomaton, SearchStats, Strategy};
use crate::regex::{
    determinize, glushkov, is_unambiguous, parse_regex, single_final, AutomatonError, Nfa,
    RegexError,
};
use crate::restricted::{all_restricted, any_restricted, RestrictedSearch, Restrictor};
use crate::walk::{AllShortestWalk, AnyWalk, CountShortest, Group, PathCursor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Any,
    AnyShortest,
    All,
    AllShortest,
}

impl Selector {
    pub fn is_shortest(self) -> bool {
        matches!(self, Selector::AnyShortest | Selector::AllShortest)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selector::Any => "any",
            Selector::AnyShortest => "any-shortest",
            Selector::All => "all",
            Selector::AllShortest => "all-shortest",
        })
    }
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "any" => Ok(Selector::Any),
            "any-shortest" => Ok(Selector::AnyShortest),
            "all" => Ok(Selector::All),
            "all-shortest" => Ok(Selector::AllShortest),
            _ => Err(format!("unknown selector {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StrategyChoice {
    #[default]
    Auto,
    Bfs,
    Dfs,
}

impl FromStr for StrategyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(StrategyChoice::Auto),
            "bfs" => Ok(StrategyChoice::Bfs),
            "dfs" => Ok(StrategyChoice::Dfs),
            _ => Err(format!("unknown strategy {s:?}")),
        }
    }
}

/// A single-pattern query `(start, regex, end)` with its path modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub start: String,
    pub regex: String,
    /// Fixed end node; `None` leaves the end free.
    pub end: Option<String>,
    pub selector: Selector,
    pub restrictor: Restrictor,
    pub strategy: StrategyChoice,
    pub limit: Option<u64>,
    pub timeout: Option<Duration>,
}

impl QuerySpec {
    /// ANY SHORTEST WALK from `start`, no end, limit or timeout.
    pub fn new(start: impl Into<String>, regex: impl Into<String>) -> Self {
        QuerySpec {
            start: start.into(),
            regex: regex.into(),
            end: None,
            selector: Selector::AnyShortest,
            restrictor: Restrictor::Walk,
            strategy: StrategyChoice::Auto,
            limit: None,
            timeout: None,
        }
    }

    pub fn end(mut self, end: impl Into<String>) -> Self {
        self.end = Some(end.into());
        self
    }

    pub fn selector(mut self, selector: Selector) -> Self {
        self.selector = selector;
        self
    }

    pub fn restrictor(mut self, restrictor: Restrictor) -> Self {
        self.restrictor = restrictor;
        self
    }

    pub fn strategy(mut self, strategy: StrategyChoice) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn limit(mut self, limit: u64) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("invalid regex {regex:?}: {source}")]
    Regex { regex: String, source: RegexError },
    #[error("ALL WALK has an infinite result set; use ALL SHORTEST or a restrictor")]
    InfiniteResultSet,
    #[error("{selector} needs breadth-first search, but dfs was requested")]
    ShortestNeedsBfs { selector: Selector },
    #[error("cannot ensure unambiguity of {regex:?}: {source}")]
    Unambiguity {
        regex: String,
        source: AutomatonError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    AnyWalk,
    AllShortestWalk,
    AllRestricted { shortest: bool },
    AnyRestricted { shortest: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Free,
    Fixed(NodeId),
    /// The named end node is not in the graph; nothing can match.
    Absent,
}

impl Endpoint {
    pub fn admits(self, node: NodeId) -> bool {
        match self {
            Endpoint::Free => true,
            Endpoint::Fixed(e) => node == e,
            Endpoint::Absent => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecutablePlan {
    pub spec: QuerySpec,
    /// The automaton handed to the engine, after any determinization and
    /// final-state normalization.
    pub nfa: Nfa,
    pub automaton: QueryAutomaton,
    pub engine: EngineKind,
    pub strategy: Strategy,
    pub start: Option<NodeId>,
    pub end: Endpoint,
    pub determinized: bool,
    pub warnings: Vec<String>,
}

fn unambiguous(nfa: Nfa, regex: &str) -> Result<(Nfa, bool), PlanError> {
    if is_unambiguous(&nfa) {
        return Ok((nfa, false));
    }
    determinize(&nfa)
        .map(|d| (d, true))
        .map_err(|source| PlanError::Unambiguity {
            regex: regex.to_owned(),
            source,
        })
}

pub fn plan_query(graph: &GraphDb, spec: &QuerySpec) -> Result<ExecutablePlan, PlanError> {
    let ast = parse_regex(&spec.regex).map_err(|source| PlanError::Regex {
        regex: spec.regex.clone(),
        source,
    })?;
    let walk = spec.restrictor == Restrictor::Walk;
    if walk && spec.selector == Selector::All {
        return Err(PlanError::InfiniteResultSet);
    }
    let strategy = match (spec.strategy, spec.selector.is_shortest()) {
        (StrategyChoice::Dfs, true) => {
            return Err(PlanError::ShortestNeedsBfs {
                selector: spec.selector,
            })
        }
        (StrategyChoice::Bfs, _) => Strategy::Bfs,
        (StrategyChoice::Dfs, false) => Strategy::Dfs,
        (StrategyChoice::Auto, true) => Strategy::Bfs,
        (StrategyChoice::Auto, false) if walk => Strategy::Bfs,
        (StrategyChoice::Auto, false) => Strategy::Dfs,
    };

    let nfa = glushkov(&ast);
    let (nfa, engine, determinized) = match (spec.selector, walk) {
        (Selector::Any | Selector::AnyShortest, true) => (nfa, EngineKind::AnyWalk, false),
        (Selector::AllShortest, true) => {
            let (nfa, det) = unambiguous(nfa, &spec.regex)?;
            (single_final(&nfa), EngineKind::AllShortestWalk, det)
        }
        (Selector::All | Selector::AllShortest, false) => {
            let (nfa, det) = unambiguous(nfa, &spec.regex)?;
            let shortest = spec.selector == Selector::AllShortest;
            (nfa, EngineKind::AllRestricted { shortest }, det)
        }
        (Selector::Any | Selector::AnyShortest, false) => {
            let shortest = spec.selector == Selector::AnyShortest;
            match unambiguous(nfa.clone(), &spec.regex) {
                Ok((nfa, det)) => (nfa, EngineKind::AnyRestricted { shortest }, det),
                Err(_) => (nfa, EngineKind::AnyRestricted { shortest }, false),
            }
        }
        (Selector::All, true) => unreachable!("rejected above"),
    };

    let automaton = QueryAutomaton::bind(&nfa, graph);
    let mut warnings: Vec<String> = automaton
        .unknown_labels()
        .iter()
        .map(|l| format!("label {l:?} does not occur in the graph"))
        .collect();
    let start = graph.node_id(&spec.start);
    if start.is_none() {
        warnings.push(format!(
            "start node {:?} does not occur in the graph",
            spec.start
        ));
    }
    let end = match &spec.end {
        None => Endpoint::Free,
        Some(name) => match graph.node_id(name) {
            Some(v) => Endpoint::Fixed(v),
            None => {
                warnings.push(format!("end node {name:?} does not occur in the graph"));
                Endpoint::Absent
            }
        },
    };

    Ok(ExecutablePlan {
        spec: spec.clone(),
        nfa,
        automaton,
        engine,
        strategy,
        start,
        end,
        determinized,
        warnings,
    })
}

impl ExecutablePlan {
    /// Shortest-path counts per answer node, for ALL SHORTEST WALK plans.
    pub fn count_shortest<'g>(&'g self, graph: &'g GraphDb) -> Option<CountShortest<'g>> {
        (self.engine == EngineKind::AllShortestWalk)
            .then(|| CountShortest::new(graph, &self.automaton, self.start))
    }

    fn deadline(&self) -> Deadline {
        Deadline::new(self.spec.timeout.map(|t| Instant::now() + t))
    }
}

/// One emitted answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRecord {
    pub seq: u64,
    pub node: NodeId,
    pub path: Path,
}

impl ResultRecord {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Exhausted,
    Limit,
    Timeout,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Exhausted => "exhausted",
            Termination::Limit => "limit",
            Termination::Timeout => "timeout",
        })
    }
}

enum Engine<'a> {
    Any(AnyWalk<'a>),
    Shortest {
        search: AllShortestWalk<'a>,
        current: Option<(Group, PathCursor)>,
    },
    Restricted(RestrictedSearch<'a>),
}

impl Engine<'_> {
    fn next(&mut self, end: Endpoint, deadline: &mut Deadline) -> Option<(NodeId, Path)> {
        let wanted = |v: NodeId| end.admits(v);
        match self {
            Engine::Any(s) => loop {
                let hit = s.next_hit()?;
                if wanted(hit.node) {
                    return Some((hit.node, s.path(hit)));
                }
            },
            Engine::Restricted(s) => loop {
                let hit = s.next_hit()?;
                if wanted(hit.node) {
                    return Some((hit.node, s.path(hit)));
                }
            },
            Engine::Shortest { search, current } => loop {
                if let Some((group, cursor)) = current {
                    if deadline.check() {
                        return None;
                    }
                    if let Some(p) = cursor.next_path(search.arena()) {
                        return Some((group.node, p));
                    }
                    *current = None;
                }
                let group = search.next_group()?;
                if wanted(group.node) {
                    *current = Some((group, PathCursor::new(group.index)));
                }
            },
        }
    }

    fn stats(&self) -> SearchStats {
        match self {
            Engine::Any(s) => s.stats(),
            Engine::Shortest { search, .. } => search.stats(),
            Engine::Restricted(s) => s.stats(),
        }
    }

    fn timed_out(&self) -> bool {
        match self {
            Engine::Any(s) => s.timed_out(),
            Engine::Shortest { search, .. } => search.timed_out(),
            Engine::Restricted(s) => s.timed_out(),
        }
    }
}

/// Pull-based result stream. The engine only advances when the next record
/// is requested.
pub struct ResultStream<'a> {
    engine: Engine<'a>,
    end: Endpoint,
    limit: Option<u64>,
    deadline: Deadline,
    emitted: u64,
    termination: Option<Termination>,
}

impl<'a> ResultStream<'a> {
    pub fn new(graph: &'a GraphDb, plan: &'a ExecutablePlan) -> Self {
        let deadline = plan.deadline();
        let aut = &plan.automaton;
        let engine = match plan.engine {
            EngineKind::AnyWalk => Engine::Any(
                AnyWalk::new(graph, aut, plan.start, plan.strategy).with_deadline(deadline),
            ),
            EngineKind::AllShortestWalk => Engine::Shortest {
                search: AllShortestWalk::new(graph, aut, plan.start).with_deadline(deadline),
                current: None,
            },
            EngineKind::AllRestricted { shortest } => Engine::Restricted(
                all_restricted(
                    graph,
                    aut,
                    plan.start,
                    plan.spec.restrictor,
                    shortest,
                    plan.strategy,
                )
                .expect("plan matches engine preconditions")
                .with_deadline(deadline),
            ),
            EngineKind::AnyRestricted { shortest } => Engine::Restricted(
                any_restricted(
                    graph,
                    aut,
                    plan.start,
                    plan.spec.restrictor,
                    shortest,
                    plan.strategy,
                )
                .expect("plan matches engine preconditions")
                .with_deadline(deadline),
            ),
        };
        ResultStream {
            engine,
            end: plan.end,
            limit: plan.spec.limit,
            deadline,
            emitted: 0,
            termination: None,
        }
    }

    /// Why the stream stopped, once it has.
    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn stats(&self) -> SearchStats {
        self.engine.stats()
    }
}

impl Iterator for ResultStream<'_> {
    type Item = ResultRecord;

    fn next(&mut self) -> Option<ResultRecord> {
        if self.termination.is_some() {
            return None;
        }
        if self.limit.is_some_and(|k| self.emitted >= k) {
            self.termination = Some(Termination::Limit);
            return None;
        }
        match self.engine.next(self.end, &mut self.deadline) {
            Some((node, path)) => {
                let seq = self.emitted;
                self.emitted += 1;
                if self.limit == Some(self.emitted) {
                    self.termination = Some(Termination::Limit);
                }
                Some(ResultRecord { seq, node, path })
            }
            None => {
                self.termination = Some(if self.engine.timed_out() || self.deadline.expired() {
                    Termination::Timeout
                } else {
                    Termination::Exhausted
                });
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionReport {
    /// Records accepted by the sink.
    pub results: u64,
    /// Search states created.
    pub states: u64,
    pub pops: u64,
    pub elapsed: Duration,
    pub termination: Termination,
    pub arena_bytes: usize,
    pub csr_indexes: usize,
    pub csr_bytes: usize,
}

pub type SinkError = Box<dyn StdError + Send + Sync>;

/// Receives records as they are found.
pub trait Sink {
    fn accept(&mut self, graph: &GraphDb, record: &ResultRecord) -> Result<(), SinkError>;
}

impl<F> Sink for F
where
    F: FnMut(&GraphDb, &ResultRecord) -> Result<(), SinkError>,
{
    fn accept(&mut self, graph: &GraphDb, record: &ResultRecord) -> Result<(), SinkError> {
        self(graph, record)
    }
}

/// Keeps every record.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub records: Vec<ResultRecord>,
}

impl Sink for CollectSink {
    fn accept(&mut self, _: &GraphDb, record: &ResultRecord) -> Result<(), SinkError> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// The sink failed; `report` describes the execution up to the failure.
#[derive(Debug, Error)]
#[error("result sink failed after {} records: {source}", report.results)]
pub struct ExecuteError {
    pub report: ExecutionReport,
    pub source: SinkError,
}

/// Runs `plan`, pushing every record into `sink`.
pub fn execute(
    graph: &GraphDb,
    plan: &ExecutablePlan,
    sink: &mut impl Sink,
) -> Result<ExecutionReport, ExecuteError> {
    let began = Instant::now();
    let mut stream = ResultStream::new(graph, plan);
    let mut results = 0;
    let mut failure = None;
    for record in stream.by_ref() {
        if let Err(e) = sink.accept(graph, &record) {
            failure = Some(e);
            break;
        }
        results += 1;
    }
    let stats = stream.stats();
    let (csr_indexes, csr_bytes) = graph.csr_usage();
    let report = ExecutionReport {
        results,
        states: stats.states,
        pops: stats.pops,
        elapsed: began.elapsed(),
        termination: stream.termination().unwrap_or(Termination::Exhausted),
        arena_bytes: stats.arena_bytes,
        csr_indexes,
        csr_bytes,
    };
    match failure {
        Some(source) => Err(ExecuteError { report, source }),
        None => Ok(report),
    }
}
