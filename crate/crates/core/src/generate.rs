//! Seeded instance generators.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::Cost;
use crate::graph::{GraphError, NodeId, WeightedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKind {
    RandomConnected,
    Grid,
    Path,
    Cycle,
    Complete,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::RandomConnected => "random",
            GraphKind::Grid => "grid",
            GraphKind::Path => "path",
            GraphKind::Cycle => "cycle",
            GraphKind::Complete => "complete",
        }
    }

    pub fn from_name(name: &str) -> Option<GraphKind> {
        Some(match name {
            "random" | "random-connected" => GraphKind::RandomConnected,
            "grid" => GraphKind::Grid,
            "path" => GraphKind::Path,
            "cycle" => GraphKind::Cycle,
            "complete" => GraphKind::Complete,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalPlacement {
    /// A uniformly random subset.
    Random,
    /// Evenly spaced ids, always including `0` and `n - 1` when `t >= 2`.
    Spread,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub terminals: usize,
    /// Probability of each non-tree pair becoming an edge (random kind only).
    pub density: f64,
    /// Inclusive range of whole-number weights.
    pub weight_min: u64,
    pub weight_max: u64,
    pub placement: TerminalPlacement,
}

impl GeneratorParams {
    pub fn random(n: usize, terminals: usize, density: f64, weight_min: u64, weight_max: u64) -> Self {
        GeneratorParams {
            n,
            terminals,
            density,
            weight_min,
            weight_max,
            placement: TerminalPlacement::Random,
        }
    }

    /// Unit weights, evenly spread terminals.
    pub fn unit(n: usize, terminals: usize) -> Self {
        GeneratorParams {
            n,
            terminals,
            density: 0.0,
            weight_min: 1,
            weight_max: 1,
            placement: TerminalPlacement::Spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("infeasible generator parameters: {0}")]
    Infeasible(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn generate_graph(
    kind: GraphKind,
    params: &GeneratorParams,
    seed: u64,
) -> Result<WeightedGraph, GenerateError> {
    let n = params.n;
    if n == 0 {
        return Err(GenerateError::Infeasible("n must be at least 1"));
    }
    if params.terminals == 0 || params.terminals > n {
        return Err(GenerateError::Infeasible("terminal count must be in 1..=n"));
    }
    if params.weight_min == 0 || params.weight_min > params.weight_max {
        return Err(GenerateError::Infeasible("weights must satisfy 1 <= min <= max"));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(GenerateError::Infeasible("density must be in [0, 1]"));
    }
    if kind == GraphKind::Cycle && n < 3 {
        return Err(GenerateError::Infeasible("a cycle needs at least 3 nodes"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(NodeId, NodeId)> = match kind {
        GraphKind::Path => (1..n).map(|v| (v - 1, v)).collect(),
        GraphKind::Cycle => (0..n).map(|v| (v, (v + 1) % n)).collect(),
        GraphKind::Complete => (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect(),
        GraphKind::Grid => {
            let width = ceil_sqrt(n);
            let mut pairs = Vec::new();
            for v in 0..n {
                if (v + 1) % width != 0 && v + 1 < n {
                    pairs.push((v, v + 1));
                }
                if v + width < n {
                    pairs.push((v, v + width));
                }
            }
            pairs
        }
        GraphKind::RandomConnected => {
            let mut order: Vec<NodeId> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut adjacent = alloc::vec![alloc::vec![false; n]; n];
            let mut pairs = Vec::new();
            for i in 1..n {
                let parent = order[rng.gen_range(0..i)];
                let child = order[i];
                adjacent[parent][child] = true;
                adjacent[child][parent] = true;
                pairs.push((parent.min(child), parent.max(child)));
            }
            for u in 0..n {
                for v in u + 1..n {
                    if !adjacent[u][v] && rng.gen_bool(params.density) {
                        pairs.push((u, v));
                    }
                }
            }
            pairs
        }
    };

    let edges: Vec<(NodeId, NodeId, Cost)> = pairs
        .into_iter()
        .map(|(u, v)| {
            let w = rng.gen_range(params.weight_min..=params.weight_max);
            (u, v, Cost::from_units(w))
        })
        .collect();

    let terminals: Vec<NodeId> = match params.placement {
        TerminalPlacement::Random => {
            let mut ids: Vec<NodeId> = (0..n).collect();
            let (chosen, _) = ids.partial_shuffle(&mut rng, params.terminals);
            chosen.to_vec()
        }
        TerminalPlacement::Spread => spread(n, params.terminals),
    };

    Ok(WeightedGraph::new(n, edges, terminals)?)
}

/// Shape of a randomly drawn suite instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteShape {
    pub max_nodes: usize,
    pub max_terminals: usize,
    pub weight_max: u64,
}

impl Default for SuiteShape {
    fn default() -> Self {
        SuiteShape { max_nodes: 12, max_terminals: 6, weight_max: 20 }
    }
}

/// A random connected instance with `2..=max_nodes` nodes, `1..=max_terminals`
/// terminals and integer weights in `1..=weight_max`; node count, terminal
/// count and density are drawn from `seed` too.
pub fn sample_instance(shape: &SuiteShape, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    let n = rng.gen_range(2..=shape.max_nodes.max(2));
    let t = rng.gen_range(1..=shape.max_terminals.min(n).max(1));
    let density = rng.gen_range(0.0..0.7);
    let params = GeneratorParams::random(n, t, density, 1, shape.weight_max);
    generate_graph(GraphKind::RandomConnected, &params, rng.gen()).expect("suite parameters are feasible")
}

/// Adds a distinct seed-derived amount below one unit to every weight, which
/// breaks ties between path sums.
pub fn perturb_weights(g: &WeightedGraph, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = g.edge_count() as u64;
    // offsets are distinct multiples of a random stride below SCALE / m
    let stride = (crate::cost::SCALE / (m + 1)).max(1);
    let mut offsets: Vec<u64> = (1..=m).map(|i| i * stride - rng.gen_range(0..stride / 2 + 1)).collect();
    offsets.shuffle(&mut rng);
    let mut next = offsets.into_iter();
    g.map_weights(|e| Cost::from_raw(e.weight.raw() + next.next().unwrap()))
        .expect("positive weights stay positive")
}

fn spread(n: usize, t: usize) -> Vec<NodeId> {
    if t == 1 {
        return alloc::vec![0];
    }
    (0..t).map(|i| (i * (n - 1) + (t - 1) / 2) / (t - 1)).collect()
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = 1;
    while r * r < n {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn complete_unit_graph() {
        let g = generate_graph(GraphKind::Complete, &GeneratorParams::unit(4, 4), 1).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.terminals(), &[0, 1, 2, 3]);
        assert!(g.edges().iter().all(|e| e.weight == Cost::from_units(1)));
    }

    #[test]
    fn path_with_terminal_endpoints() {
        let g = generate_graph(GraphKind::Path, &GeneratorParams::unit(3, 2), 9).unwrap();
        assert_eq!(g.terminals(), &[0, 2]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.metrics().shortest_path_diameter, 2);
    }

    #[test]
    fn spread_terminals_are_distinct() {
        for n in 1..20 {
            for t in 1..=n {
                let mut z = spread(n, t);
                z.dedup();
                assert_eq!(z.len(), t, "n={n} t={t}");
                assert!(z.iter().all(|&v| v < n));
            }
        }
    }

    #[test]
    fn infeasible_parameters() {
        let bad = GeneratorParams::unit(3, 4);
        assert!(matches!(
            generate_graph(GraphKind::Path, &bad, 0),
            Err(GenerateError::Infeasible(_))
        ));
        let bad = GeneratorParams::unit(2, 1);
        assert!(generate_graph(GraphKind::Cycle, &bad, 0).is_err());
        let mut bad = GeneratorParams::unit(5, 1);
        bad.weight_min = 0;
        assert!(generate_graph(GraphKind::Grid, &bad, 0).is_err());
    }

    proptest! {
        #[test]
        fn every_kind_yields_valid_graphs(seed in any::<u64>(), n in 3usize..30, t in 1usize..4) {
            for kind in [GraphKind::RandomConnected, GraphKind::Grid, GraphKind::Path,
                         GraphKind::Cycle, GraphKind::Complete] {
                let params = GeneratorParams::random(n, t.min(n), 0.2, 1, 20);
                let g = generate_graph(kind, &params, seed).unwrap();
                prop_assert_eq!(g.node_count(), n);
                prop_assert_eq!(g.terminal_count(), t.min(n));
            }
        }

        #[test]
        fn same_seed_same_graph(seed in any::<u64>()) {
            let params = GeneratorParams::random(12, 4, 0.4, 1, 20);
            let a = generate_graph(GraphKind::RandomConnected, &params, seed).unwrap();
            let b = generate_graph(GraphKind::RandomConnected, &params, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
