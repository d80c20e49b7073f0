//! Round and message sweeps with fitted constants for the asymptotic bounds.

use clique_steiner_core::engine::EngineConfig;
use clique_steiner_core::generate::{generate_graph, GenerateError, GeneratorParams, GraphKind};
use clique_steiner_core::graph::shortest_path_diameter;
use clique_steiner_core::steiner::{APSP_STEP, MST_STEP, SPF_STEP};
use clique_steiner_core::{stccm_a, stccm_b, PipelineError, PipelineOptions, SteinerRun, WeightedGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{kind} n={n}: {source}")]
    Pipeline { kind: &'static str, n: usize, source: PipelineError },
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub kind: GraphKind,
    pub sizes: Vec<usize>,
    pub terminals: usize,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sweeps: Vec<Sweep>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sweeps: vec![
                Sweep { kind: GraphKind::Complete, sizes: vec![8, 27, 64], terminals: 4 },
                Sweep { kind: GraphKind::Path, sizes: vec![8, 16, 32, 64], terminals: 2 },
                Sweep { kind: GraphKind::RandomConnected, sizes: vec![8, 27, 64], terminals: 6 },
            ],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub algorithm: &'static str,
    pub kind: &'static str,
    pub n: usize,
    pub t: usize,
    /// Shortest path diameter of the instance.
    pub s: usize,
    pub rounds: usize,
    pub messages: usize,
    pub spf_rounds: usize,
    pub spf_messages: usize,
    pub mst_phases: usize,
    pub mst_rounds: usize,
    pub mst_messages: usize,
}

impl BenchRow {
    fn from_run(algorithm: &'static str, kind: &'static str, g: &WeightedGraph, s: usize, run: &SteinerRun) -> Self {
        let (spf_rounds, spf_messages) = if algorithm == "stccm-a" {
            let apsp = run.metrics.phase(APSP_STEP).map_or((0, 0), |p| (p.rounds, p.messages));
            let ann = run.metrics.phase(SPF_STEP).map_or((0, 0), |p| (p.rounds, p.messages));
            (apsp.0 + ann.0, apsp.1 + ann.1)
        } else {
            run.metrics.phase(SPF_STEP).map_or((0, 0), |p| (p.rounds, p.messages))
        };
        let mst = run.metrics.phase(MST_STEP);
        BenchRow {
            algorithm,
            kind,
            n: g.node_count(),
            t: g.terminal_count(),
            s,
            rounds: run.metrics.rounds(),
            messages: run.metrics.messages(),
            spf_rounds,
            spf_messages,
            mst_phases: run.mst_phases.len(),
            mst_rounds: mst.map_or(0, |p| p.rounds),
            mst_messages: mst.map_or(0, |p| p.messages),
        }
    }
}

/// Largest observed constants relating measured counts to their bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FittedConstants {
    /// Max of `rounds / (n^(1/3) log2 n)` for the APSP pipeline.
    pub apsp_rounds: f64,
    /// Max of `rounds - (S + 2) - mst_rounds` for the relaxation pipeline.
    pub relax_overhead: i64,
    /// Max of `relaxation messages / (S (n - t)^2 + n^2)`.
    pub relax_messages: f64,
    /// Max of `mst_messages / n^2`.
    pub mst_messages: f64,
    /// Max of `mst_rounds / phases`.
    pub rounds_per_phase: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fitted: FittedConstants,
}

pub fn fit(rows: &[BenchRow]) -> FittedConstants {
    let mut f = FittedConstants { relax_overhead: i64::MIN, ..Default::default() };
    for r in rows {
        let n = r.n as f64;
        if r.n > 1 {
            f.mst_messages = f.mst_messages.max(r.mst_messages as f64 / (n * n));
        }
        if r.mst_phases > 0 {
            f.rounds_per_phase = f.rounds_per_phase.max(r.mst_rounds as f64 / r.mst_phases as f64);
        }
        match r.algorithm {
            "stccm-a" if r.n > 1 => {
                f.apsp_rounds = f.apsp_rounds.max(r.rounds as f64 / (n.cbrt() * n.log2()));
            }
            "stccm-b" => {
                let excess = r.rounds as i64 - (r.s as i64 + 2) - r.mst_rounds as i64;
                f.relax_overhead = f.relax_overhead.max(excess);
                let nt = (r.n - r.t) as f64;
                f.relax_messages = f.relax_messages.max(r.spf_messages as f64 / (r.s as f64 * nt * nt + n * n));
            }
            _ => {}
        }
    }
    if f.relax_overhead == i64::MIN {
        f.relax_overhead = 0;
    }
    f
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let opts = PipelineOptions { engine: EngineConfig::default(), ..Default::default() };
    let mut rows = Vec::new();
    for sweep in &cfg.sweeps {
        for &n in &sweep.sizes {
            let t = sweep.terminals.min(n);
            let params = match sweep.kind {
                GraphKind::RandomConnected => GeneratorParams::random(n, t, 0.2, 1, 20),
                _ => GeneratorParams::unit(n, t),
            };
            let g = generate_graph(sweep.kind, &params, cfg.seed)?;
            let s = shortest_path_diameter(&g);
            let kind = sweep.kind.name();
            let wrap = |source| BenchError::Pipeline { kind, n, source };
            let a = stccm_a(&g, &opts).map_err(wrap)?;
            rows.push(BenchRow::from_run("stccm-a", kind, &g, s, &a));
            let b = stccm_b(&g, &opts).map_err(wrap)?;
            rows.push(BenchRow::from_run("stccm-b", kind, &g, s, &b));
        }
    }
    let fitted = fit(&rows);
    Ok(BenchReport { rows, fitted })
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<8} {:<9} {:>4} {:>3} {:>4} {:>7} {:>10} {:>7} {:>10} {:>6} {:>6} {:>9}\n",
            "alg", "kind", "n", "t", "S", "rounds", "messages", "spf_r", "spf_m", "phases", "mst_r", "mst_m"
        );
        for r in &self.rows {
            s += &format!(
                "{:<8} {:<9} {:>4} {:>3} {:>4} {:>7} {:>10} {:>7} {:>10} {:>6} {:>6} {:>9}\n",
                r.algorithm,
                r.kind,
                r.n,
                r.t,
                r.s,
                r.rounds,
                r.messages,
                r.spf_rounds,
                r.spf_messages,
                r.mst_phases,
                r.mst_rounds,
                r.mst_messages
            );
        }
        let f = &self.fitted;
        s += &format!("fit stccm-a rounds / (n^(1/3) log2 n): {:.3}\n", f.apsp_rounds);
        s += &format!("fit stccm-b rounds - (S+2) - mst rounds: {}\n", f.relax_overhead);
        s += &format!("fit relaxation messages / (S(n-t)^2 + n^2): {:.3}\n", f.relax_messages);
        s += &format!("fit mst messages / n^2: {:.3}\n", f.mst_messages);
        s += &format!("fit mst rounds / phase: {:.3}\n", f.rounds_per_phase);
        s
    }
}
