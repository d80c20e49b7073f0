use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use clique_steiner::bench::{run_bench, BenchConfig, Sweep};
use clique_steiner::record::{trace_lines, ResultRecord};
use clique_steiner::solve::{solve, Algorithm};
use clique_steiner::stp::{parse_stp, serialize_stp};
use clique_steiner::verify::{run_suite, Check, VerifyConfig};
use clique_steiner_core::generate::{generate_graph, GeneratorParams, GraphKind, SuiteShape, TerminalPlacement};
use clique_steiner_core::oracles::{dreyfus_wagner, MAX_EXACT_TERMINALS};
use clique_steiner_core::steiner::PruneMode;
use clique_steiner_core::{EngineConfig, WeightedGraph};

const SEED_VAR: &str = "CLIQUE_STEINER_SEED";

#[derive(Parser)]
#[command(name = "clique-steiner", version, about = "Congested clique Steiner tree simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its result record and tree edges.
    Solve(SolveArgs),
    /// Run the invariant suite over seeded random instances.
    Verify(VerifyArgs),
    /// Sweep instance sizes and report rounds, messages and fitted constants.
    Bench(BenchArgs),
    /// Write a generated instance in STP format.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct GenOptions {
    /// Generator kind: random, grid, path, cycle or complete.
    #[arg(long = "gen", visible_alias = "kind", value_parser = parse_kind)]
    kind: Option<GraphKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    t: usize,
    /// Extra-edge probability for the random kind.
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    weight_min: u64,
    #[arg(long, default_value_t = 20)]
    weight_max: u64,
    /// Place terminals at evenly spaced ids instead of at random.
    #[arg(long)]
    spread: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Kv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "stccm-b")]
    alg: Algorithm,
    /// STP file to read. Without it an instance is generated.
    #[arg(long, conflicts_with = "kind")]
    input: Option<PathBuf>,
    #[command(flatten)]
    generator: GenOptions,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_rounds: Option<u64>,
    /// Write one line per envelope to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kv")]
    format: Format,
    /// Skip the exact optimum and ratio.
    #[arg(long)]
    no_opt: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// spf, mst, ratio, rounds, messages or all.
    #[arg(long, default_value = "all")]
    check: Vec<String>,
    #[arg(long, default_value_t = 12)]
    max_nodes: usize,
    #[arg(long, default_value_t = 6)]
    max_terminals: usize,
    #[arg(long, default_value_t = 20)]
    weight_max: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_rounds: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every spanning tree node during pruning (fault injection).
    #[arg(long, hide = true)]
    broken_pruning: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the sweep to one generator kind.
    #[arg(long = "gen", visible_alias = "kind", value_parser = parse_kind)]
    kind: Option<GraphKind>,
    /// Comma-separated sizes for a restricted sweep.
    #[arg(long, value_delimiter = ',', requires = "kind")]
    n: Vec<usize>,
    #[arg(long, requires = "kind")]
    t: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    generator: GenOptions,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<GraphKind, String> {
    GraphKind::from_name(s).ok_or_else(|| format!("unknown generator kind {s:?}"))
}

fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_VAR}={v:?} is not an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn engine_config(max_rounds: Option<u64>, trace: bool) -> EngineConfig {
    let mut cfg = EngineConfig { trace, ..EngineConfig::default() };
    if let Some(m) = max_rounds {
        cfg.max_rounds = usize::try_from(m).unwrap_or(usize::MAX);
    }
    cfg
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generated(opts: &GenOptions) -> Result<WeightedGraph> {
    let kind = opts.kind.unwrap_or(GraphKind::RandomConnected);
    let params = GeneratorParams {
        n: opts.n,
        terminals: opts.t,
        density: opts.density,
        weight_min: opts.weight_min,
        weight_max: opts.weight_max,
        placement: if opts.spread { TerminalPlacement::Spread } else { TerminalPlacement::Random },
    };
    Ok(generate_graph(kind, &params, effective_seed(opts.seed)?)?)
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let g = match &a.input {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_stp(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => generated(&a.generator)?,
    };
    if a.alg == Algorithm::Exact && g.terminal_count() > MAX_EXACT_TERMINALS {
        bail!("exact solver supports at most {MAX_EXACT_TERMINALS} terminals, instance has {}", g.terminal_count());
    }
    let engine = engine_config(a.max_rounds, a.trace.is_some());
    let solution = solve(&g, a.alg, engine, PruneMode::Normal)?;
    let opt = if a.no_opt || g.terminal_count() > MAX_EXACT_TERMINALS {
        None
    } else {
        Some(dreyfus_wagner(&g)?.cost)
    };
    let record = ResultRecord::new(a.alg.name(), &g, &solution.edges, &solution.metrics, opt);
    if let Some(p) = &a.trace {
        fs::write(p, trace_lines(&solution.trace)).with_context(|| format!("writing {}", p.display()))?;
    }
    let text = match a.format {
        Format::Kv => record.to_kv(),
        Format::Json => record.to_json() + "\n",
    };
    emit(&a.out, &text)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let mut checks = Vec::new();
    for c in &a.check {
        for name in c.split(',') {
            let set = Check::parse_set(name.trim()).with_context(|| format!("unknown check {name:?}"))?;
            checks.extend(set);
        }
    }
    checks.sort();
    checks.dedup();
    let cfg = VerifyConfig {
        instances: a.instances,
        shape: SuiteShape { max_nodes: a.max_nodes, max_terminals: a.max_terminals, weight_max: a.weight_max },
        seed: effective_seed(a.seed)?,
        checks,
        prune_mode: if a.broken_pruning { PruneMode::KeepAll } else { PruneMode::Normal },
        engine: engine_config(a.max_rounds, false),
    };
    let report = run_suite(&cfg);
    emit(&a.out, &report.render())?;
    Ok(report.passed())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig { seed: effective_seed(a.seed)?, ..BenchConfig::default() };
    if let Some(kind) = a.kind {
        let default = cfg.sweeps.iter().find(|s| s.kind == kind).cloned();
        let sizes = if a.n.is_empty() { default.as_ref().map_or(vec![8, 27, 64], |s| s.sizes.clone()) } else { a.n };
        let terminals = a.t.or(default.map(|s| s.terminals)).unwrap_or(4);
        cfg.sweeps = vec![Sweep { kind, sizes, terminals }];
    }
    let report = run_bench(&cfg)?;
    emit(&a.out, &report.render())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let g = generated(&a.generator)?;
    emit(&a.out, &serialize_stp(&g))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a).map(|_| true),
        Command::Gen(a) => cmd_gen(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
