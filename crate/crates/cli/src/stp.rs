//! A subset of the SteinLib STP format: `SECTION Graph` with `Nodes`, `Edges`
//! and `E u v w` lines and `SECTION Terminals` with `T v` lines. Node ids in
//! files are 1-based. Bare `E`/`T` lines outside sections are accepted too;
//! without a `Nodes` line the node count is the largest id seen.

use std::fmt::Write;

use clique_steiner_core::{Cost, GraphError, NodeId, WeightedGraph};
use thiserror::Error;

const MAGIC: &str = "33D32945 STP File, STP Format Version 1.0";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: GraphError },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, message: impl Into<String>) -> StpError {
    StpError::Syntax { line, message: message.into() }
}

#[derive(PartialEq)]
enum Section {
    None,
    Graph,
    Terminals,
    Skipped,
}

fn node_id(tok: Option<&str>, line: usize) -> Result<usize, StpError> {
    let tok = tok.ok_or_else(|| syntax(line, "missing node id"))?;
    match tok.parse::<usize>() {
        Ok(0) => Err(syntax(line, "node ids start at 1")),
        Ok(v) => Ok(v - 1),
        Err(_) => Err(syntax(line, format!("bad node id {tok:?}"))),
    }
}

pub fn parse_stp(text: &str) -> Result<WeightedGraph, StpError> {
    let mut section = Section::None;
    let mut declared_nodes: Option<usize> = None;
    let mut edges: Vec<(NodeId, NodeId, Cost, usize)> = Vec::new();
    let mut terminals: Vec<(NodeId, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() || content.starts_with("33D32945") {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap();
        match key.to_ascii_uppercase().as_str() {
            "SECTION" => {
                let name = toks.next().ok_or_else(|| syntax(line, "SECTION without a name"))?;
                section = match name.to_ascii_lowercase().as_str() {
                    "graph" => Section::Graph,
                    "terminals" => Section::Terminals,
                    _ => Section::Skipped,
                };
                continue;
            }
            "END" => {
                section = Section::None;
                continue;
            }
            "EOF" => break,
            _ => {}
        }
        if section == Section::Skipped {
            continue;
        }
        match key.to_ascii_uppercase().as_str() {
            "NODES" if section != Section::Terminals => {
                let n = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| syntax(line, "bad Nodes count"))?;
                declared_nodes = Some(n);
            }
            // counts are advisory
            "EDGES" | "ARCS" | "TERMINALS" => continue,
            "E" if section != Section::Terminals => {
                let u = node_id(toks.next(), line)?;
                let v = node_id(toks.next(), line)?;
                let wtok = toks.next().ok_or_else(|| syntax(line, "missing edge weight"))?;
                let w = Cost::parse_decimal(wtok).ok_or_else(|| syntax(line, format!("bad weight {wtok:?}")))?;
                if u == v {
                    return Err(StpError::Invalid { line, source: GraphError::SelfLoop { node: u } });
                }
                if w == Cost::ZERO {
                    return Err(StpError::Invalid { line, source: GraphError::NonPositiveWeight { u: u.min(v), v: u.max(v) } });
                }
                edges.push((u, v, w, line));
            }
            "T" if section != Section::Graph => terminals.push((node_id(toks.next(), line)?, line)),
            _ => return Err(syntax(line, format!("unexpected {key:?}"))),
        }
        if toks.next().is_some() {
            return Err(syntax(line, "trailing tokens"));
        }
    }

    let max_id = edges.iter().flat_map(|e| [e.0, e.1]).chain(terminals.iter().map(|t| t.0)).max();
    let n = declared_nodes.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    for &(u, v, _, line) in &edges {
        if u.max(v) >= n {
            return Err(StpError::Invalid { line, source: GraphError::NodeOutOfRange { node: u.max(v), n } });
        }
    }
    for &(z, line) in &terminals {
        if z >= n {
            return Err(StpError::Invalid { line, source: GraphError::NodeOutOfRange { node: z, n } });
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(u, v, _, line) in &edges {
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(StpError::Invalid { line, source: GraphError::ParallelEdge { u: u.min(v), v: u.max(v) } });
        }
    }
    Ok(WeightedGraph::new(n, edges.into_iter().map(|(u, v, w, _)| (u, v, w)), terminals.into_iter().map(|t| t.0))?)
}

/// Canonical text: edges sorted by endpoints, terminals ascending.
pub fn serialize_stp(g: &WeightedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "SECTION Graph").unwrap();
    writeln!(out, "Nodes {}", g.node_count()).unwrap();
    writeln!(out, "Edges {}", g.edge_count()).unwrap();
    for e in g.edges() {
        writeln!(out, "E {} {} {}", e.u + 1, e.v + 1, e.weight).unwrap();
    }
    writeln!(out, "END\n").unwrap();
    writeln!(out, "SECTION Terminals").unwrap();
    writeln!(out, "Terminals {}", g.terminal_count()).unwrap();
    for z in g.terminals() {
        writeln!(out, "T {}", z + 1).unwrap();
    }
    writeln!(out, "END\n\nEOF").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_two_node_file() {
        let g = parse_stp("E 1 2 5\nT 1\nT 2\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.weight(0, 1), Some(Cost::from_units(5)));
        assert_eq!(g.terminals(), &[0, 1]);
    }

    #[test]
    fn self_loop_names_line() {
        let err = parse_stp("SECTION Graph\nNodes 2\nE 1 1 3\nEND\n").unwrap_err();
        assert_eq!(err, StpError::Invalid { line: 3, source: GraphError::SelfLoop { node: 0 } });
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn zero_weight_and_garbage() {
        assert!(matches!(parse_stp("E 1 2 0\nT 1\n"), Err(StpError::Invalid { line: 1, .. })));
        assert!(matches!(parse_stp("E 1 2 x\nT 1\n"), Err(StpError::Syntax { line: 1, .. })));
        assert!(matches!(parse_stp("Q\n"), Err(StpError::Syntax { line: 1, .. })));
    }

    #[test]
    fn disconnected_file() {
        let text = "SECTION Graph\nNodes 4\nE 1 2 1\nE 3 4 1\nEND\nSECTION Terminals\nT 1\nEND\n";
        assert_eq!(parse_stp(text).unwrap_err(), StpError::Graph(GraphError::Disconnected));
    }

    #[test]
    fn cycle_round_trip() {
        let text = "E 1 2 1\nE 2 3 2\nE 3 4 3\nE 4 1 4\nT 1\nT 3\n";
        let g = parse_stp(text).unwrap();
        let again = parse_stp(&serialize_stp(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn canonical_output() {
        let g = WeightedGraph::new(2, [(1, 0, Cost::parse_decimal("2.5").unwrap())], [0]).unwrap();
        let text = serialize_stp(&g);
        assert_eq!(
            text,
            format!("{MAGIC}\nSECTION Graph\nNodes 2\nEdges 1\nE 1 2 2.5\nEND\n\nSECTION Terminals\nTerminals 1\nT 1\nEND\n\nEOF\n")
        );
        assert_eq!(parse_stp(&text).unwrap().weight(0, 1), Some(Cost::parse_decimal("2.5").unwrap()));
    }

    #[test]
    fn comment_sections_are_skipped() {
        let text = format!("{MAGIC}\nSECTION Comment\nName \"x\"\nEND\n\nE 1 2 3\nT 2\nEOF\n");
        assert_eq!(parse_stp(&text).unwrap().terminals(), &[1]);
    }

    proptest::proptest! {
        #[test]
        fn generated_graphs_round_trip(seed in proptest::prelude::any::<u64>()) {
            use clique_steiner_core::generate::{perturb_weights, sample_instance, SuiteShape};
            let g = perturb_weights(&sample_instance(&SuiteShape::default(), seed), seed);
            let text = serialize_stp(&g);
            proptest::prop_assert_eq!(parse_stp(&text).unwrap(), g.clone());
            proptest::prop_assert_eq!(serialize_stp(&parse_stp(&text).unwrap()), text);
        }
    }
}
