use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rpq_core::output::{encode_ndjson, encode_text};
use rpq_core::pipeline::SinkError;
use rpq_core::{
    execute, gen_diamond, load_graph, plan_query, ExecutionReport, GraphDb, IndexMode, QuerySpec,
    Restrictor, ResultRecord, Selector, StrategyChoice, Termination,
};

const EXIT_PLAN: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_GRAPH: u8 = 6;

/// Evaluate a regular path query over an edge-labeled graph file.
#[derive(Debug, Parser)]
#[command(name = "rpq", version, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Graph file: one `from label to [edge-id]` per line.
    #[arg(long, required = true)]
    graph: Option<PathBuf>,

    /// Start node.
    #[arg(long, required = true)]
    start: Option<String>,

    /// Path regex, e.g. `knows+/lives` or `(^a|b)*`.
    #[arg(long, required = true)]
    regex: Option<String>,

    /// Only report paths ending at this node.
    #[arg(long)]
    end: Option<String>,

    #[arg(long, value_enum, default_value_t = SelectorArg::AnyShortest)]
    selector: SelectorArg,

    #[arg(long, value_enum, default_value_t = RestrictorArg::Walk)]
    restrictor: RestrictorArg,

    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,

    /// Stop after this many records.
    #[arg(long)]
    limit: Option<u64>,

    /// Wall-clock budget in milliseconds.
    #[arg(long = "timeout-ms", alias = "timeout")]
    timeout_ms: Option<u64>,

    #[arg(long, value_enum, default_value_t = IndexArg::CsrCache)]
    index: IndexArg,

    #[arg(long, value_enum, default_value_t = OutputArg::Ndjson)]
    output: OutputArg,

    /// Print a `key=value` statistics line to stderr.
    #[arg(long)]
    stats: bool,

    /// Run the query this many times; records are printed for the first run.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    repeat: u32,

    /// Print shortest-path counts per node instead of paths
    /// (ALL SHORTEST WALK only).
    #[arg(long)]
    count: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the diamond-chain graph with `n` diamonds.
    GenDiamond {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectorArg {
    Any,
    AnyShortest,
    All,
    AllShortest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RestrictorArg {
    Walk,
    Trail,
    Simple,
    Acyclic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Bfs,
    Dfs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexArg {
    CsrCache,
    CsrFull,
    Scan,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputArg {
    Ndjson,
    Text,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rpq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(Command::GenDiamond { n }) = cli.command {
        let g = gen_diamond(n as usize).map_err(|e| Failure::new(EXIT_PLAN, e.to_string()))?;
        let mut out = io::stdout().lock();
        return match out
            .write_all(g.render().as_bytes())
            .and_then(|_| out.flush())
        {
            Ok(()) => Ok(0),
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(0),
            Err(e) => Err(Failure::new(EXIT_IO, format!("writing output: {e}"))),
        };
    }

    let graph_path = cli.graph.clone().expect("required by clap");
    let text = std::fs::read_to_string(&graph_path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", graph_path.display())))?;
    let mut graph = load_graph(&text)
        .map_err(|e| Failure::new(EXIT_GRAPH, format!("{}: {e}", graph_path.display())))?;
    graph.set_index_mode(match cli.index {
        IndexArg::CsrCache => IndexMode::CsrCache,
        IndexArg::CsrFull => IndexMode::CsrFull,
        IndexArg::Scan => IndexMode::Scan,
    });

    let spec = query_spec(&cli);
    if cli.count
        && !matches!(
            (spec.selector, spec.restrictor),
            (Selector::AllShortest, Restrictor::Walk)
        )
    {
        return Err(Failure::new(
            EXIT_PLAN,
            "--count needs --selector all-shortest --restrictor walk",
        ));
    }
    let plan = plan_query(&graph, &spec).map_err(|e| {
        Failure::new(
            EXIT_PLAN,
            format!("query {:?} from {:?}: {e}", spec.regex, spec.start),
        )
    })?;
    for w in &plan.warnings {
        eprintln!("rpq: warning: {w}");
    }

    let mut code = 0;
    for run in 0..cli.repeat {
        let report = if cli.count {
            run_count(&graph, &plan, run == 0)?
        } else {
            run_query(&graph, &plan, cli.output, run == 0)?
        };
        if cli.stats {
            eprintln!("{}", stats_line(&graph, &report, run, cli.repeat));
        }
        if report.termination == Termination::Timeout {
            code = EXIT_TIMEOUT;
        }
    }
    Ok(code)
}

fn query_spec(cli: &Cli) -> QuerySpec {
    let mut spec = QuerySpec::new(
        cli.start.clone().expect("required by clap"),
        cli.regex.clone().expect("required by clap"),
    )
    .selector(match cli.selector {
        SelectorArg::Any => Selector::Any,
        SelectorArg::AnyShortest => Selector::AnyShortest,
        SelectorArg::All => Selector::All,
        SelectorArg::AllShortest => Selector::AllShortest,
    })
    .restrictor(match cli.restrictor {
        RestrictorArg::Walk => Restrictor::Walk,
        RestrictorArg::Trail => Restrictor::Trail,
        RestrictorArg::Simple => Restrictor::Simple,
        RestrictorArg::Acyclic => Restrictor::Acyclic,
    })
    .strategy(match cli.strategy {
        StrategyArg::Auto => StrategyChoice::Auto,
        StrategyArg::Bfs => StrategyChoice::Bfs,
        StrategyArg::Dfs => StrategyChoice::Dfs,
    });
    spec.end = cli.end.clone();
    spec.limit = cli.limit;
    spec.timeout = cli.timeout_ms.map(Duration::from_millis);
    spec
}

fn is_broken_pipe(e: &SinkError) -> bool {
    e.downcast_ref::<io::Error>()
        .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

fn run_query(
    graph: &GraphDb,
    plan: &rpq_core::ExecutablePlan,
    output: OutputArg,
    print: bool,
) -> Result<ExecutionReport, Failure> {
    let mut out = BufWriter::new(io::stdout().lock());
    let mut sink = |g: &GraphDb, r: &ResultRecord| -> Result<(), SinkError> {
        if print {
            let line = match output {
                OutputArg::Ndjson => encode_ndjson(g, r),
                OutputArg::Text => encode_text(g, r),
            };
            writeln!(out, "{line}")?;
        }
        Ok(())
    };
    let report = match execute(graph, plan, &mut sink) {
        Ok(report) => report,
        Err(e) if is_broken_pipe(&e.source) => return Ok(e.report),
        Err(e) => {
            return Err(Failure::new(
                EXIT_IO,
                format!("writing output: {}", e.source),
            ))
        }
    };
    match out.flush() {
        Ok(()) => Ok(report),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(report),
        Err(e) => Err(Failure::new(EXIT_IO, format!("writing output: {e}"))),
    }
}

fn run_count(
    graph: &GraphDb,
    plan: &rpq_core::ExecutablePlan,
    print: bool,
) -> Result<ExecutionReport, Failure> {
    let began = std::time::Instant::now();
    let mut counts = plan
        .count_shortest(graph)
        .expect("count plans use the all-shortest walk engine")
        .with_deadline(rpq_core::product::Deadline::new(
            plan.spec.timeout.map(|t| began + t),
        ));
    let mut out = BufWriter::new(io::stdout().lock());
    let mut results = 0u64;
    let mut termination = Termination::Exhausted;
    let write_err = |e: io::Error| Failure::new(EXIT_IO, format!("writing output: {e}"));
    loop {
        if plan.spec.limit.is_some_and(|k| results >= k) {
            termination = Termination::Limit;
            break;
        }
        let Some((node, n)) = counts.next() else {
            if counts.timed_out() {
                termination = Termination::Timeout;
            }
            break;
        };
        if !plan.end.admits(node) {
            continue;
        }
        if print {
            let name = serde_json::to_string(graph.node_name(node)).expect("strings serialize");
            let line = format!("{{\"node\":{name},\"count\":\"{n}\"}}");
            match writeln!(out, "{line}") {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => break,
                r => r.map_err(write_err)?,
            }
        }
        results += 1;
    }
    if let Err(e) = out.flush() {
        if e.kind() != io::ErrorKind::BrokenPipe {
            return Err(write_err(e));
        }
    }
    let stats = counts.stats();
    let (csr_indexes, csr_bytes) = graph.csr_usage();
    Ok(ExecutionReport {
        results,
        states: stats.states,
        pops: stats.pops,
        elapsed: began.elapsed(),
        termination,
        arena_bytes: stats.arena_bytes,
        csr_indexes,
        csr_bytes,
    })
}

fn stats_line(graph: &GraphDb, r: &ExecutionReport, run: u32, repeat: u32) -> String {
    let mut line = String::new();
    if repeat > 1 {
        line.push_str(&format!("run={} ", run + 1));
    }
    line.push_str(&format!(
        "nodes={} edges={} states={} pops={} results={} elapsed_ms={:.3} termination={} \
         arena_bytes={} csr_indexes={} csr_bytes={}",
        graph.node_count(),
        graph.edge_count(),
        r.states,
        r.pops,
        r.results,
        r.elapsed.as_secs_f64() * 1000.0,
        r.termination,
        r.arena_bytes,
        r.csr_indexes,
        r.csr_bytes,
    ));
    line
}
