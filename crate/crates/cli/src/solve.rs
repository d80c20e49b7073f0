use std::fmt;
use std::str::FromStr;

use clique_steiner_core::engine::{EngineConfig, TraceRecord};
use clique_steiner_core::oracles::{dreyfus_wagner, kmb_sequential, OracleError};
use clique_steiner_core::steiner::PruneMode;
use clique_steiner_core::{stccm_a, stccm_b, Edge, PipelineError, PipelineOptions, RoundMetrics, SteinerRun, WeightedGraph};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    StccmA,
    StccmB,
    Kmb,
    Exact,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::StccmA => "stccm-a",
            Algorithm::StccmB => "stccm-b",
            Algorithm::Kmb => "kmb",
            Algorithm::Exact => "exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stccm-a" => Ok(Algorithm::StccmA),
            "stccm-b" => Ok(Algorithm::StccmB),
            "kmb" => Ok(Algorithm::Kmb),
            "exact" => Ok(Algorithm::Exact),
            _ => Err(format!("unknown algorithm {s:?} (expected stccm-a, stccm-b, kmb or exact)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub struct Solution {
    pub edges: Vec<Edge>,
    pub metrics: RoundMetrics,
    pub trace: Vec<TraceRecord>,
    pub run: Option<SteinerRun>,
}

pub fn solve(g: &WeightedGraph, alg: Algorithm, engine: EngineConfig, prune_mode: PruneMode) -> Result<Solution, SolveError> {
    let opts = PipelineOptions { engine, prune_mode };
    let from_run = |run: SteinerRun| Solution {
        edges: run.tree.edges.clone(),
        metrics: run.metrics.clone(),
        trace: run.trace.clone(),
        run: Some(run),
    };
    Ok(match alg {
        Algorithm::StccmA => from_run(stccm_a(g, &opts)?),
        Algorithm::StccmB => from_run(stccm_b(g, &opts)?),
        Algorithm::Kmb => Solution { edges: kmb_sequential(g), metrics: RoundMetrics::new(), trace: Vec::new(), run: None },
        Algorithm::Exact => {
            Solution { edges: dreyfus_wagner(g)?.edges, metrics: RoundMetrics::new(), trace: Vec::new(), run: None }
        }
    })
}
