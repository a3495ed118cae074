//! In-memory regular path query engine that returns witnessing paths.
//!
//! A query `(start, regex, ?x)` asks for nodes reachable from `start` by a
//! path whose label word matches `regex`. The *selector* (ANY, ANY SHORTEST,
//! ALL, ALL SHORTEST) picks which witnessing paths are returned per answer
//! node; the *restrictor* (WALK, TRAIL, SIMPLE, ACYCLIC) picks which paths
//! are admissible.
//!
//! ```
//! use rpq_core::{execute, load_graph, plan_query, CollectSink, QuerySpec, Selector};
//!
//! let g = load_graph("a knows b\nb knows c\n").unwrap();
//! let spec = QuerySpec::new("a", "knows+").selector(Selector::AllShortest);
//! let plan = plan_query(&g, &spec).unwrap();
//! let mut sink = CollectSink::default();
//! let report = execute(&g, &plan, &mut sink).unwrap();
//! assert_eq!(report.results, 2);
//! ```

pub mod graph;
pub mod oracle;
pub mod output;
pub mod pipeline;
pub mod product;
pub mod regex;
pub mod restricted;
pub mod synth;
pub mod walk;

pub use graph::{
    load_graph, Direction, Edge, EdgeId, GraphBuilder, GraphDb, GraphError, IndexMode, LabelId,
    NodeId,
};
pub use pipeline::{
    execute, plan_query, CollectSink, ExecutablePlan, ExecutionReport, PlanError, QuerySpec,
    ResultRecord, ResultStream, Selector, Sink, StrategyChoice, Termination,
};
pub use product::{Path, QueryAutomaton, Strategy};
pub use regex::{parse_regex, Nfa, Regex};
pub use restricted::Restrictor;
pub use synth::gen_diamond;
