//! The input graph `G = (V, E, w)` with its terminal set, plus the graph
//! metrics the round bounds are stated in.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Reverse;

use thiserror::Error;

use crate::cost::Cost;
use crate::dsu::DisjointSets;

pub type NodeId = usize;

/// An undirected edge with `u < v`.
///
/// Field order matters: the derived `Ord` is the global edge order
/// `(weight, min endpoint, max endpoint)` used for every MST tie-break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub weight: Cost,
    pub u: NodeId,
    pub v: NodeId,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, weight: Cost) -> Edge {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        Edge { weight, u, v }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }

    pub fn other(&self, x: NodeId) -> NodeId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, x: NodeId) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeId },
    #[error("parallel edge between {u} and {v}")]
    ParallelEdge { u: NodeId, v: NodeId },
    #[error("edge ({u}, {v}) has non-positive weight")]
    NonPositiveWeight { u: NodeId, v: NodeId },
    #[error("edge ({u}, {v}) has infinite weight")]
    InfiniteWeight { u: NodeId, v: NodeId },
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {node} listed twice")]
    DuplicateTerminal { node: NodeId },
    #[error("graph is disconnected")]
    Disconnected,
}

/// Connected, simple, undirected, positively weighted graph with a nonempty
/// terminal set. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeId, Cost)>>,
    terminals: Vec<NodeId>,
    terminal_mask: Vec<bool>,
}

impl WeightedGraph {
    pub fn new<E, T>(n: usize, edges: E, terminals: T) -> Result<Self, GraphError>
    where
        E: IntoIterator<Item = (NodeId, NodeId, Cost)>,
        T: IntoIterator<Item = NodeId>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop { node: a });
            }
            let e = Edge::new(a, b, w);
            if w == Cost::ZERO {
                return Err(GraphError::NonPositiveWeight { u: e.u, v: e.v });
            }
            if w.is_infinite() {
                return Err(GraphError::InfiniteWeight { u: e.u, v: e.v });
            }
            list.push(e);
        }
        list.sort_by_key(|e| (e.u, e.v));
        for pair in list.windows(2) {
            if (pair[0].u, pair[0].v) == (pair[1].u, pair[1].v) {
                return Err(GraphError::ParallelEdge { u: pair[0].u, v: pair[0].v });
            }
        }

        let mut terminal_mask = alloc::vec![false; n];
        let mut terms = Vec::new();
        for z in terminals {
            if z >= n {
                return Err(GraphError::NodeOutOfRange { node: z, n });
            }
            if terminal_mask[z] {
                return Err(GraphError::DuplicateTerminal { node: z });
            }
            terminal_mask[z] = true;
            terms.push(z);
        }
        if terms.is_empty() {
            return Err(GraphError::NoTerminals);
        }
        terms.sort_unstable();

        let mut adjacency = alloc::vec![Vec::new(); n];
        for e in &list {
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        for row in &mut adjacency {
            row.sort_unstable_by_key(|&(x, _)| x);
        }

        let mut sets = DisjointSets::new(n);
        let mut components = n;
        for e in &list {
            if sets.union(e.u, e.v) {
                components -= 1;
            }
        }
        if components != 1 {
            return Err(GraphError::Disconnected);
        }

        Ok(WeightedGraph {
            n,
            edges: list,
            adjacency,
            terminals: terms,
            terminal_mask,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, Cost)] {
        &self.adjacency[v]
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<Cost> {
        let row = &self.adjacency[a];
        row.binary_search_by_key(&b, |&(x, _)| x).ok().map(|i| row[i].1)
    }

    /// Weight of the clique link `a`–`b`: the edge weight, or infinity.
    pub fn link_weight(&self, a: NodeId, b: NodeId) -> Cost {
        if a == b {
            Cost::ZERO
        } else {
            self.weight(a, b).unwrap_or(Cost::INFINITY)
        }
    }

    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.terminal_mask[v]
    }

    /// Same topology with a different terminal set.
    pub fn with_terminals<T>(&self, terminals: T) -> Result<Self, GraphError>
    where
        T: IntoIterator<Item = NodeId>,
    {
        WeightedGraph::new(
            self.n,
            self.edges.iter().map(|e| (e.u, e.v, e.weight)),
            terminals,
        )
    }

    /// Same topology and terminals with every weight replaced by `f(edge)`.
    pub fn map_weights<F>(&self, mut f: F) -> Result<Self, GraphError>
    where
        F: FnMut(&Edge) -> Cost,
    {
        WeightedGraph::new(
            self.n,
            self.edges.iter().map(|e| (e.u, e.v, f(e))),
            self.terminals.iter().copied(),
        )
    }

    pub fn total_weight(&self) -> Cost {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn metrics(&self) -> GraphMetrics {
        GraphMetrics {
            shortest_path_diameter: shortest_path_diameter(self),
            unweighted_diameter: unweighted_diameter(self),
            edge_count: self.edge_count(),
            terminal_count: self.terminal_count(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphMetrics {
    /// `S`: the largest, over node pairs, of the fewest edges on any
    /// minimum-weight path between them.
    pub shortest_path_diameter: usize,
    /// `D`: the hop diameter ignoring weights.
    pub unweighted_diameter: usize,
    pub edge_count: usize,
    pub terminal_count: usize,
}

/// Single-source shortest distances.
pub fn dijkstra(g: &WeightedGraph, source: NodeId) -> Vec<Cost> {
    let mut dist = alloc::vec![Cost::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = Cost::ZERO;
    heap.push(Reverse((Cost::ZERO, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(x, w) in g.neighbors(v) {
            let nd = d + w;
            if nd < dist[x] {
                dist[x] = nd;
                heap.push(Reverse((nd, x)));
            }
        }
    }
    dist
}

/// `S`, computed by hop-bounded relaxation: from each source, run
/// Bellman–Ford layer by layer and record the first layer at which every
/// node has reached its final distance.
pub fn shortest_path_diameter(g: &WeightedGraph) -> usize {
    let n = g.node_count();
    let mut worst = 0;
    for source in 0..n {
        let exact = dijkstra(g, source);
        let mut bounded = alloc::vec![Cost::INFINITY; n];
        bounded[source] = Cost::ZERO;
        let mut hops = 0;
        while bounded != exact {
            let prev = bounded.clone();
            for e in g.edges() {
                bounded[e.v] = bounded[e.v].min(prev[e.u] + e.weight);
                bounded[e.u] = bounded[e.u].min(prev[e.v] + e.weight);
            }
            hops += 1;
        }
        worst = worst.max(hops);
    }
    worst
}

/// `D`, by breadth-first search from every node.
pub fn unweighted_diameter(g: &WeightedGraph) -> usize {
    let n = g.node_count();
    let mut worst = 0;
    for source in 0..n {
        let mut depth = alloc::vec![usize::MAX; n];
        depth[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &(x, _) in g.neighbors(v) {
                if depth[x] == usize::MAX {
                    depth[x] = depth[v] + 1;
                    worst = worst.max(depth[x]);
                    queue.push_back(x);
                }
            }
        }
    }
    worst
}
