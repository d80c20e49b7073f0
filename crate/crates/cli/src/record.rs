//! Result records: one `key=value` pair per line, or JSON.

use std::fmt::Write;

use clique_steiner_core::engine::TraceRecord;
use clique_steiner_core::{Cost, Edge, RoundMetrics, WeightedGraph};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub label: String,
    pub rounds: usize,
    pub messages: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub weight: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    #[serde(rename = "S")]
    pub hop_diameter: usize,
    pub cost: String,
    pub opt_cost: Option<String>,
    pub ratio: Option<f64>,
    pub rounds: usize,
    pub messages: usize,
    pub steps: Vec<StepRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl ResultRecord {
    pub fn new(algorithm: &str, g: &WeightedGraph, tree: &[Edge], metrics: &RoundMetrics, opt: Option<Cost>) -> Self {
        let cost: Cost = tree.iter().map(|e| e.weight).sum();
        ResultRecord {
            algorithm: algorithm.to_string(),
            n: g.node_count(),
            m: g.edge_count(),
            t: g.terminal_count(),
            hop_diameter: g.metrics().shortest_path_diameter,
            cost: cost.to_string(),
            opt_cost: opt.map(|c| c.to_string()),
            ratio: opt.map(|o| if o == Cost::ZERO { 1.0 } else { cost.ratio(o) }),
            rounds: metrics.rounds(),
            messages: metrics.messages(),
            steps: metrics
                .phases()
                .iter()
                .map(|p| StepRecord { label: p.label.clone(), rounds: p.rounds, messages: p.messages })
                .collect(),
            edges: tree.iter().map(|e| EdgeRecord { u: e.u, v: e.v, weight: e.weight.to_string() }).collect(),
        }
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "algorithm={}", self.algorithm).unwrap();
        writeln!(s, "n={}", self.n).unwrap();
        writeln!(s, "m={}", self.m).unwrap();
        writeln!(s, "t={}", self.t).unwrap();
        writeln!(s, "S={}", self.hop_diameter).unwrap();
        writeln!(s, "cost={}", self.cost).unwrap();
        if let Some(o) = &self.opt_cost {
            writeln!(s, "opt_cost={o}").unwrap();
        }
        if let Some(r) = self.ratio {
            writeln!(s, "ratio={r:.6}").unwrap();
        }
        writeln!(s, "rounds={}", self.rounds).unwrap();
        writeln!(s, "messages={}", self.messages).unwrap();
        for step in &self.steps {
            writeln!(s, "step.{}.rounds={}", step.label, step.rounds).unwrap();
            writeln!(s, "step.{}.messages={}", step.label, step.messages).unwrap();
        }
        for e in &self.edges {
            writeln!(s, "edge={} {} {}", e.u, e.v, e.weight).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// One `round src dst tag` line per envelope.
pub fn trace_lines(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(trace.len() * 16);
    for r in trace {
        writeln!(s, "{r}").unwrap();
    }
    s
}
