//! Exact sequential reference algorithms. They favour obviousness over speed
//! and are used only to check the distributed pipelines.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

use crate::apsp::DistanceMatrix;
use crate::cost::Cost;
use crate::dsu::DisjointSets;
use crate::graph::{dijkstra, Edge, NodeId, WeightedGraph};
use crate::spf::ShortestPathForest;

pub const MAX_EXACT_TERMINALS: usize = 12;
pub const MAX_BRUTE_FORCE_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exact Steiner oracle supports at most {max} terminals, got {t}")]
    TooManyTerminals { t: usize, max: usize },
    #[error("brute force supports at most {max} nodes, got {n}")]
    TooManyNodes { n: usize, max: usize },
    #[error("finite-weight edges do not span all {n} nodes")]
    Disconnected { n: usize },
}

/// All-pairs distances with successor pointers.
#[derive(Clone, Debug)]
pub struct AllPairs {
    pub dist: DistanceMatrix,
    next: Vec<Option<NodeId>>,
}

impl AllPairs {
    /// Node sequence of one shortest `u`–`v` path.
    pub fn path(&self, u: NodeId, v: NodeId) -> Vec<NodeId> {
        let n = self.dist.n();
        let mut out = alloc::vec![u];
        let mut at = u;
        while at != v {
            at = self.next[at * n + v].expect("reachable");
            out.push(at);
        }
        out
    }
}

pub fn floyd_warshall(g: &WeightedGraph) -> AllPairs {
    let n = g.node_count();
    let mut dist = DistanceMatrix::identity(n);
    let mut next = alloc::vec![None; n * n];
    for u in 0..n {
        next[u * n + u] = Some(u);
    }
    for e in g.edges() {
        dist.set(e.u, e.v, e.weight);
        dist.set(e.v, e.u, e.weight);
        next[e.u * n + e.v] = Some(e.v);
        next[e.v * n + e.u] = Some(e.u);
    }
    for k in 0..n {
        for i in 0..n {
            if dist.get(i, k).is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dist.get(i, k) + dist.get(k, j);
                if via < dist.get(i, j) {
                    dist.set(i, j, via);
                    next[i * n + j] = next[i * n + k];
                }
            }
        }
    }
    AllPairs { dist, next }
}

/// Minimum spanning forest of the finite edges under the `(weight, u, v)`
/// order.
pub fn kruskal_forest(n: usize, edges: &[Edge]) -> Vec<Edge> {
    let mut sorted: Vec<Edge> = edges.iter().copied().filter(|e| e.weight.is_finite()).collect();
    sorted.sort();
    let mut sets = DisjointSets::new(n);
    sorted.into_iter().filter(|e| sets.union(e.u, e.v)).collect()
}

/// Minimum spanning tree of the finite edges under the `(weight, u, v)` order.
pub fn kruskal(n: usize, edges: &[Edge]) -> Result<Vec<Edge>, OracleError> {
    let tree = kruskal_forest(n, edges);
    if tree.len() + 1 != n.max(1) {
        return Err(OracleError::Disconnected { n });
    }
    Ok(tree)
}

pub fn tree_cost(edges: &[Edge]) -> Cost {
    edges.iter().map(|e| e.weight).sum()
}

/// Number of degree-one nodes; a tree without edges counts as one leaf.
pub fn leaf_count(edges: &[Edge]) -> usize {
    if edges.is_empty() {
        return 1;
    }
    let mut degree = alloc::collections::BTreeMap::<NodeId, usize>::new();
    for e in edges {
        *degree.entry(e.u).or_default() += 1;
        *degree.entry(e.v).or_default() += 1;
    }
    degree.values().filter(|&&d| d == 1).count()
}

/// Complete graph on the terminals weighted by shortest path distances. Node
/// `i` of the result stands for `g.terminals()[i]`.
pub fn complete_distance_graph(g: &WeightedGraph) -> WeightedGraph {
    let z = g.terminals();
    let mut edges = Vec::new();
    for (i, &a) in z.iter().enumerate() {
        let d = dijkstra(g, a);
        for (j, &b) in z.iter().enumerate().skip(i + 1) {
            edges.push((i, j, d[b]));
        }
    }
    WeightedGraph::new(z.len(), edges, 0..z.len()).expect("distance graph of a connected graph is valid")
}

/// Repeatedly strips non-terminal leaves.
pub fn prune_nonterminal_leaves(g: &WeightedGraph, edges: &[Edge]) -> Vec<Edge> {
    let mut kept: Vec<Edge> = edges.to_vec();
    loop {
        let mut degree = alloc::vec![0usize; g.node_count()];
        for e in &kept {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let before = kept.len();
        kept.retain(|e| !((degree[e.u] == 1 && !g.is_terminal(e.u)) || (degree[e.v] == 1 && !g.is_terminal(e.v))));
        if kept.len() == before {
            return kept;
        }
    }
}

/// The sequential distance-graph heuristic: MST of the complete distance
/// graph, expanded into shortest paths, re-spanned by an MST and pruned.
pub fn kmb_sequential(g: &WeightedGraph) -> Vec<Edge> {
    let z = g.terminals();
    let kz = complete_distance_graph(g);
    let kz_tree = kruskal(kz.node_count(), kz.edges()).expect("complete graph is connected");
    let paths = floyd_warshall(g);

    let mut used = BTreeSet::new();
    for e in &kz_tree {
        let path = paths.path(z[e.u], z[e.v]);
        for hop in path.windows(2) {
            used.insert((hop[0].min(hop[1]), hop[0].max(hop[1])));
        }
    }
    let sub: Vec<Edge> = used.into_iter().map(|(a, b)| Edge::new(a, b, g.weight(a, b).unwrap())).collect();
    let spanning = kruskal_forest(g.node_count(), &sub);
    let mut out = prune_nonterminal_leaves(g, &spanning);
    out.sort_by_key(|e| (e.u, e.v));
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSteinerResult {
    pub edges: Vec<Edge>,
    pub cost: Cost,
    /// Leaves of `edges`, all of them terminals.
    pub leaves: usize,
}

#[derive(Clone, Copy)]
enum Back {
    Leaf,
    Split(usize),
    Walk(NodeId),
}

/// Exact minimum Steiner tree by dynamic programming over terminal subsets.
pub fn dreyfus_wagner(g: &WeightedGraph) -> Result<ExactSteinerResult, OracleError> {
    let z = g.terminals();
    let t = z.len();
    if t > MAX_EXACT_TERMINALS {
        return Err(OracleError::TooManyTerminals { t, max: MAX_EXACT_TERMINALS });
    }
    let n = g.node_count();
    let paths = floyd_warshall(g);
    let d = &paths.dist;
    let full = (1usize << t) - 1;

    // best[mask][v]: cheapest tree spanning the terminals in mask plus v
    let mut best = alloc::vec![alloc::vec![Cost::INFINITY; n]; full + 1];
    let mut back = alloc::vec![alloc::vec![Back::Leaf; n]; full + 1];
    for (i, &zi) in z.iter().enumerate() {
        for v in 0..n {
            best[1 << i][v] = d.get(zi, v);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        for v in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                // each unordered split once
                if sub < (mask ^ sub) {
                    let c = best[sub][v] + best[mask ^ sub][v];
                    if c < best[mask][v] {
                        best[mask][v] = c;
                        back[mask][v] = Back::Split(sub);
                    }
                }
                sub = (sub - 1) & mask;
            }
        }
        let merged = best[mask].clone();
        for v in 0..n {
            for u in 0..n {
                let c = merged[u] + d.get(u, v);
                if c < best[mask][v] {
                    best[mask][v] = c;
                    back[mask][v] = Back::Walk(u);
                }
            }
        }
    }

    let root = z[0];
    let mut used = BTreeSet::new();
    let mut stack = alloc::vec![(full, root)];
    let add_path = |a: NodeId, b: NodeId, used: &mut BTreeSet<(NodeId, NodeId)>| {
        for hop in paths.path(a, b).windows(2) {
            used.insert((hop[0].min(hop[1]), hop[0].max(hop[1])));
        }
    };
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v] {
            Back::Leaf => {
                let zi = z[mask.trailing_zeros() as usize];
                add_path(zi, v, &mut used);
            }
            Back::Split(sub) => {
                stack.push((sub, v));
                stack.push((mask ^ sub, v));
            }
            Back::Walk(u) => {
                add_path(u, v, &mut used);
                stack.push((mask, u));
            }
        }
    }
    let sub: Vec<Edge> = used.into_iter().map(|(a, b)| Edge::new(a, b, g.weight(a, b).unwrap())).collect();
    let mut edges = prune_nonterminal_leaves(g, &kruskal_forest(n, &sub));
    edges.sort_by_key(|e| (e.u, e.v));
    let cost = tree_cost(&edges);
    debug_assert_eq!(cost, best[full][root]);
    let leaves = leaf_count(&edges);
    Ok(ExactSteinerResult { edges, cost, leaves })
}

/// Optimum by enumerating every node superset of the terminals and taking
/// the cheapest spanning tree of the induced subgraph. Returns the cost.
pub fn brute_force_steiner(g: &WeightedGraph) -> Result<Cost, OracleError> {
    let n = g.node_count();
    if n > MAX_BRUTE_FORCE_NODES {
        return Err(OracleError::TooManyNodes { n, max: MAX_BRUTE_FORCE_NODES });
    }
    let required: usize = g.terminals().iter().map(|&z| 1usize << z).sum();
    let mut best = Cost::INFINITY;
    for set in 0..(1usize << n) {
        if set & required != required {
            continue;
        }
        let members: Vec<NodeId> = (0..n).filter(|v| set >> v & 1 == 1).collect();
        let inside: Vec<Edge> = g.edges().iter().copied().filter(|e| set >> e.u & 1 == 1 && set >> e.v & 1 == 1).collect();
        let tree = kruskal_forest(n, &inside);
        if tree.len() + 1 == members.len() {
            best = best.min(tree_cost(&tree));
        }
    }
    Ok(best)
}

/// Nearest terminal of every node by Dijkstra from each terminal, the
/// smallest id winning ties. The parent is the smallest-id neighbour that
/// continues a shortest path to the same terminal.
pub fn brute_force_spf(g: &WeightedGraph) -> ShortestPathForest {
    let n = g.node_count();
    let mut best = alloc::vec![(Cost::INFINITY, usize::MAX); n];
    for &z in g.terminals() {
        for (v, d) in dijkstra(g, z).into_iter().enumerate() {
            if (d, z) < best[v] {
                best[v] = (d, z);
            }
        }
    }
    let parent = (0..n)
        .map(|v| {
            if g.is_terminal(v) {
                return v;
            }
            g.neighbors(v)
                .iter()
                .find(|&&(p, w)| best[p].1 == best[v].1 && best[p].0 + w == best[v].0)
                .expect("shortest path continues through a neighbour")
                .0
        })
        .collect();
    ShortestPathForest {
        source: best.iter().map(|b| b.1).collect(),
        distance: best.iter().map(|b| b.0).collect(),
        parent,
    }
}
