//! Pull-based execution: early output, limits, deadlines and sharing one
//! graph across threads.

mod common;

use std::thread;
use std::time::{Duration, Instant};

use common::PEOPLE;
use rpq_core::output::encode_ndjson;
use rpq_core::pipeline::{ResultStream, SinkError};
use rpq_core::{
    execute, gen_diamond, load_graph, plan_query, CollectSink, GraphDb, IndexMode, QuerySpec,
    Restrictor, ResultRecord, Selector, StrategyChoice, Termination,
};

#[derive(Debug)]
struct Enough;

impl std::fmt::Display for Enough {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("enough")
    }
}

impl std::error::Error for Enough {}

#[test]
fn first_record_arrives_before_the_frontier_drains() {
    let g = gen_diamond(100).unwrap();
    for restrictor in [Restrictor::Trail, Restrictor::Simple, Restrictor::Acyclic] {
        let spec = QuerySpec::new("start", "a*")
            .selector(Selector::All)
            .restrictor(restrictor)
            .strategy(StrategyChoice::Dfs)
            .end("end");
        let plan = plan_query(&g, &spec).unwrap();
        let mut seen = 0;
        let mut sink = |_: &GraphDb, r: &ResultRecord| -> Result<(), SinkError> {
            seen += 1;
            assert_eq!(r.len(), 200);
            if seen == 2 {
                return Err(Box::new(Enough));
            }
            Ok(())
        };
        let err = execute(&g, &plan, &mut sink).unwrap_err();
        assert!(err.source.downcast_ref::<Enough>().is_some());
        assert_eq!(seen, 2);
        assert_eq!(err.report.results, 1);
        // one DFS descent plus its siblings, against 2^100 paths overall
        assert!(
            err.report.states < 1_000,
            "{restrictor}: {}",
            err.report.states
        );
    }
}

#[test]
fn deadline_stops_an_exponential_search() {
    let g = gen_diamond(40).unwrap();
    let spec = QuerySpec::new("start", "a*")
        .selector(Selector::All)
        .restrictor(Restrictor::Trail)
        .strategy(StrategyChoice::Bfs)
        .end("end")
        .timeout(Duration::from_millis(50));
    let plan = plan_query(&g, &spec).unwrap();
    let began = Instant::now();
    let report = execute(&g, &plan, &mut CollectSink::default()).unwrap();
    assert_eq!(report.termination, Termination::Timeout);
    assert!(
        began.elapsed() < Duration::from_secs(2),
        "{:?}",
        began.elapsed()
    );

    // the deadline also covers enumeration inside one all-shortest group
    let g = gen_diamond(30).unwrap();
    let spec = QuerySpec::new("start", "a*")
        .selector(Selector::AllShortest)
        .end("end")
        .timeout(Duration::from_millis(50));
    let plan = plan_query(&g, &spec).unwrap();
    let began = Instant::now();
    let mut stream = ResultStream::new(&g, &plan);
    let n = stream.by_ref().count();
    assert!(n < 1 << 30);
    assert_eq!(stream.termination(), Some(Termination::Timeout));
    assert!(
        began.elapsed() < Duration::from_secs(2),
        "{:?}",
        began.elapsed()
    );
}

#[test]
fn limit_counts_records_after_the_end_filter() {
    let g = load_graph(PEOPLE).unwrap();
    let all = |limit: Option<u64>| {
        let mut spec = QuerySpec::new("Joe", "knows*/(works|lives)")
            .selector(Selector::AllShortest)
            .end("ENS");
        spec.limit = limit;
        let plan = plan_query(&g, &spec).unwrap();
        let mut sink = CollectSink::default();
        let report = execute(&g, &plan, &mut sink).unwrap();
        (sink.records, report)
    };
    let (records, report) = all(None);
    assert_eq!(records.len(), 3);
    assert_eq!(report.termination, Termination::Exhausted);
    let (head, report) = all(Some(2));
    assert_eq!(head, records[..2]);
    assert_eq!(report.results, 2);
    assert_eq!(report.termination, Termination::Limit);
    assert!(head.iter().all(|r| g.node_name(r.node) == "ENS"));
    assert_eq!(head.iter().map(|r| r.seq).collect::<Vec<_>>(), [0, 1]);
}

#[test]
fn limit_zero_emits_nothing() {
    let g = load_graph(PEOPLE).unwrap();
    let mut spec = QuerySpec::new("John", "knows+/lives");
    spec.limit = Some(0);
    let plan = plan_query(&g, &spec).unwrap();
    let mut sink = CollectSink::default();
    let report = execute(&g, &plan, &mut sink).unwrap();
    assert!(sink.records.is_empty());
    assert_eq!(report.termination, Termination::Limit);
}

fn ndjson(g: &GraphDb, spec: &QuerySpec) -> Vec<String> {
    let plan = plan_query(g, spec).unwrap();
    ResultStream::new(g, &plan)
        .map(|r| encode_ndjson(g, &r))
        .collect()
}

#[test]
fn threads_share_one_graph_and_its_index_cache() {
    let mut g = gen_diamond(8).unwrap();
    g.set_index_mode(IndexMode::CsrCache);
    let specs: Vec<QuerySpec> = [
        (Selector::AllShortest, Restrictor::Walk),
        (Selector::Any, Restrictor::Walk),
        (Selector::All, Restrictor::Trail),
        (Selector::AllShortest, Restrictor::Simple),
        (Selector::Any, Restrictor::Acyclic),
    ]
    .into_iter()
    .map(|(s, r)| {
        QuerySpec::new("start", "(a|^a)*")
            .selector(s)
            .restrictor(r)
            .limit(5_000)
    })
    .collect();

    let mut reference = gen_diamond(8).unwrap();
    reference.set_index_mode(IndexMode::Scan);
    let expected: Vec<Vec<String>> = specs.iter().map(|s| ndjson(&reference, s)).collect();

    let got: Vec<Vec<String>> = thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .cycle()
            .take(4 * specs.len())
            .map(|spec| scope.spawn(|| ndjson(&g, spec)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (i, out) in got.iter().enumerate() {
        assert_eq!(out, &expected[i % specs.len()], "query {}", i % specs.len());
    }
    let (indexes, bytes) = g.csr_usage();
    assert_eq!(indexes, 2);
    assert!(bytes > 0);
}
