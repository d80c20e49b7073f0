//! The two Steiner tree pipelines: shortest path forest, edge reweighting
//! relative to the forest, clique MST of the reweighted graph and pruning of
//! non-terminal leaves.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::apsp::distributed_apsp;
use crate::cost::Cost;
use crate::engine::{
    Context, EngineConfig, EngineError, NodeProgram, Payload, RoundMetrics, SelfDelivery, Session, Status, Tag,
    TraceRecord,
};
use crate::graph::{Edge, NodeId, WeightedGraph};
use crate::mst::{lotker_mst, MstError, PhaseRecord};
use crate::spf::{spf_b_run, spf_from_apsp, ShortestPathForest, SpfError};

pub const APSP_STEP: &str = "apsp";
pub const SPF_STEP: &str = "spf";
pub const CLASSIFY_STEP: &str = "classify";
pub const MST_STEP: &str = "mst";
pub const PRUNE_STEP: &str = "prune";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Spf(#[from] SpfError),
    #[error(transparent)]
    Mst(#[from] MstError),
    #[error("endpoints {u} and {v} classify their edge differently")]
    InconsistentForest { u: NodeId, v: NodeId },
    #[error("pruning input is not a spanning tree")]
    NotATree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeCategory {
    /// On a parent pointer of the forest.
    Tree,
    /// Joins two different trees of the forest.
    InterTree,
    /// Joins two nodes of the same tree off the forest.
    IntraTree,
}

impl EdgeCategory {
    pub fn name(self) -> &'static str {
        match self {
            EdgeCategory::Tree => "tree",
            EdgeCategory::InterTree => "inter_tree",
            EdgeCategory::IntraTree => "intra_tree",
        }
    }

    /// Category of `u`–`v` given both endpoints' forest data.
    pub fn of(f: &ShortestPathForest, u: NodeId, v: NodeId) -> Self {
        if f.is_tree_edge(u, v) {
            EdgeCategory::Tree
        } else if f.source[u] != f.source[v] {
            EdgeCategory::InterTree
        } else {
            EdgeCategory::IntraTree
        }
    }
}

impl fmt::Display for EdgeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModifiedEdge {
    /// Original edge and weight.
    pub edge: Edge,
    pub category: EdgeCategory,
    pub reweighted: Cost,
}

/// `G` with weights relative to the forest: zero on tree edges, infinite on
/// intra-tree edges and `d(u) + w + d(v)` on inter-tree edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifiedGraph {
    pub n: usize,
    pub edges: Vec<ModifiedEdge>,
}

impl ModifiedGraph {
    pub fn reweighted_edges(&self) -> Vec<Edge> {
        self.edges.iter().map(|m| Edge::new(m.edge.u, m.edge.v, m.reweighted)).collect()
    }

    pub fn category(&self, a: NodeId, b: NodeId) -> Option<EdgeCategory> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges
            .binary_search_by_key(&(u, v), |m| (m.edge.u, m.edge.v))
            .ok()
            .map(|i| self.edges[i].category)
    }
}

pub fn reweight(f: &ShortestPathForest, e: Edge) -> (EdgeCategory, Cost) {
    let category = EdgeCategory::of(f, e.u, e.v);
    let w = match category {
        EdgeCategory::Tree => Cost::ZERO,
        EdgeCategory::IntraTree => Cost::INFINITY,
        EdgeCategory::InterTree => f.distance[e.u] + e.weight + f.distance[e.v],
    };
    (category, w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct SetCategory {
    source: NodeId,
    distance: Cost,
    parent: NodeId,
}

impl Payload for SetCategory {
    fn tag(&self) -> Tag {
        Tag::SetCategory
    }

    fn slots(&self) -> usize {
        // the sender id travels with the envelope
        3
    }
}

struct Classifier {
    id: NodeId,
    own: SetCategory,
    neighbors: Vec<(NodeId, Cost)>,
    decided: Vec<(NodeId, EdgeCategory, Cost)>,
}

impl NodeProgram for Classifier {
    type Msg = SetCategory;

    fn step(&mut self, ctx: &mut Context<'_, SetCategory>) -> Status {
        if ctx.round() == 1 {
            for &(u, _) in &self.neighbors {
                ctx.send(u, self.own.clone());
            }
            return Status::Running;
        }
        for env in ctx.inbox() {
            let u = env.src;
            let w = self.neighbors.iter().find(|&&(x, _)| x == u).expect("message over an edge").1;
            let their = &env.payload;
            let category = if self.own.parent == u || their.parent == self.id {
                EdgeCategory::Tree
            } else if self.own.source != their.source {
                EdgeCategory::InterTree
            } else {
                EdgeCategory::IntraTree
            };
            let reweighted = match category {
                EdgeCategory::Tree => Cost::ZERO,
                EdgeCategory::IntraTree => Cost::INFINITY,
                EdgeCategory::InterTree => self.own.distance + w + their.distance,
            };
            self.decided.push((u, category, reweighted));
        }
        Status::Halted
    }
}

/// Every node tells each neighbour its forest data over their edge, and both
/// endpoints classify and reweight the edge.
pub fn classify_and_reweight(
    g: &WeightedGraph,
    f: &ShortestPathForest,
    session: &mut Session,
    label: &str,
) -> Result<ModifiedGraph, PipelineError> {
    let n = g.node_count();
    let programs = (0..n)
        .map(|v| Classifier {
            id: v,
            own: SetCategory { source: f.source[v], distance: f.distance[v], parent: f.parent[v] },
            neighbors: g.neighbors(v).to_vec(),
            decided: Vec::new(),
        })
        .collect();
    let done = session.run(label, programs)?;
    let mut edges = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let view = |a: NodeId, b: NodeId| done[a].decided.iter().find(|d| d.0 == b).map(|d| (d.1, d.2));
        let (Some(left), Some(right)) = (view(e.u, e.v), view(e.v, e.u)) else {
            return Err(PipelineError::InconsistentForest { u: e.u, v: e.v });
        };
        if left != right {
            return Err(PipelineError::InconsistentForest { u: e.u, v: e.v });
        }
        edges.push(ModifiedEdge { edge: *e, category: left.0, reweighted: left.1 });
    }
    Ok(ModifiedGraph { n, edges })
}

/// Output tree with original weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerTree {
    /// Tree edges sorted by endpoints.
    pub edges: Vec<Edge>,
    /// Whether each node belongs to the tree.
    pub steiner_flag: Vec<bool>,
    /// Each node's incident tree edges, by neighbour.
    pub branches: Vec<Vec<NodeId>>,
    /// Smallest terminal.
    pub root: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    NotAnEdge { u: NodeId, v: NodeId },
    Cycle,
    Disconnected,
    MissingTerminal { node: NodeId },
    NonTerminalLeaf { node: NodeId },
    FlagMismatch { node: NodeId },
    BranchMismatch { node: NodeId },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::NotAnEdge { u, v } => write!(f, "tree edge {u}-{v} is not in the graph"),
            TreeViolation::Cycle => f.write_str("tree contains a cycle"),
            TreeViolation::Disconnected => f.write_str("tree is disconnected"),
            TreeViolation::MissingTerminal { node } => write!(f, "terminal {node} is not in the tree"),
            TreeViolation::NonTerminalLeaf { node } => write!(f, "leaf {node} is not a terminal"),
            TreeViolation::FlagMismatch { node } => write!(f, "membership flag of node {node} is wrong"),
            TreeViolation::BranchMismatch { node } => write!(f, "branch list of node {node} disagrees with the edges"),
        }
    }
}

impl SteinerTree {
    pub fn cost(&self) -> Cost {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn node_count(&self) -> usize {
        self.steiner_flag.iter().filter(|&&f| f).count()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.branches.len()).filter(|&v| self.branches[v].len() == 1).collect()
    }

    /// Structural checks against `g`; empty iff the tree is a valid Steiner
    /// tree whose leaves are all terminals.
    pub fn violations(&self, g: &WeightedGraph) -> Vec<TreeViolation> {
        let n = g.node_count();
        let mut out = Vec::new();
        let mut sets = crate::dsu::DisjointSets::new(n);
        let mut degree = alloc::vec![0usize; n];
        for e in &self.edges {
            if g.weight(e.u, e.v) != Some(e.weight) {
                out.push(TreeViolation::NotAnEdge { u: e.u, v: e.v });
            }
            if !sets.union(e.u, e.v) {
                out.push(TreeViolation::Cycle);
            }
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        for v in 0..n {
            let member = degree[v] > 0 || (self.edges.is_empty() && v == self.root);
            if member != self.steiner_flag[v] {
                out.push(TreeViolation::FlagMismatch { node: v });
            }
            let mut expected: Vec<NodeId> = self.edges.iter().filter(|e| e.touches(v)).map(|e| e.other(v)).collect();
            expected.sort_unstable();
            if expected != self.branches[v] {
                out.push(TreeViolation::BranchMismatch { node: v });
            }
            if g.is_terminal(v) && !self.steiner_flag[v] {
                out.push(TreeViolation::MissingTerminal { node: v });
            }
            if degree[v] == 1 && !g.is_terminal(v) {
                out.push(TreeViolation::NonTerminalLeaf { node: v });
            }
        }
        let members: Vec<NodeId> = (0..n).filter(|&v| self.steiner_flag[v]).collect();
        if members.iter().any(|&v| !sets.same(v, members[0])) {
            out.push(TreeViolation::Disconnected);
        }
        out
    }

    /// One line `u v w` per edge.
    pub fn edge_lines(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut s = alloc::string::String::new();
        for e in &self.edges {
            writeln!(s, "{} {} {}", e.u, e.v, e.weight).unwrap();
        }
        s
    }
}

/// Test hook for the pruning step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PruneMode {
    #[default]
    Normal,
    /// Keeps every node, leaving non-terminal leaves in place.
    KeepAll,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PruneMsg {
    ParentAnnounce { parent: NodeId, terminal: bool },
    PruneRequest,
}

impl Payload for PruneMsg {
    fn tag(&self) -> Tag {
        match self {
            PruneMsg::ParentAnnounce { .. } => Tag::ParentAnnounce,
            PruneMsg::PruneRequest => Tag::PruneRequest,
        }
    }

    fn slots(&self) -> usize {
        2
    }
}

struct Pruner {
    id: NodeId,
    terminal: bool,
    /// Parent in the spanning tree rooted at the smallest terminal.
    parent: NodeId,
    mode: PruneMode,
    keep: bool,
    branches: Vec<NodeId>,
}

impl NodeProgram for Pruner {
    type Msg = PruneMsg;

    fn step(&mut self, ctx: &mut Context<'_, PruneMsg>) -> Status {
        let n = ctx.n();
        match ctx.round() {
            1 => {
                ctx.broadcast(PruneMsg::ParentAnnounce { parent: self.parent, terminal: self.terminal }, SelfDelivery::Exclude);
                Status::Running
            }
            2 => {
                let mut parent = alloc::vec![0; n];
                let mut terminal = alloc::vec![false; n];
                parent[self.id] = self.parent;
                terminal[self.id] = self.terminal;
                for env in ctx.inbox() {
                    if let PruneMsg::ParentAnnounce { parent: p, terminal: t } = env.payload {
                        parent[env.src] = p;
                        terminal[env.src] = t;
                    }
                }
                self.branches = (0..n)
                    .filter(|&u| u != self.id && (parent[u] == self.id || parent[self.id] == u))
                    .collect();
                self.keep = match self.mode {
                    PruneMode::KeepAll => true,
                    PruneMode::Normal => self.terminal || separates_terminals(self.id, &parent, &terminal),
                };
                if !self.keep {
                    for &u in &self.branches {
                        ctx.send(u, PruneMsg::PruneRequest);
                    }
                    self.branches.clear();
                    return Status::Halted;
                }
                Status::Running
            }
            _ => {
                let gone: Vec<NodeId> = ctx.inbox().iter().map(|e| e.src).collect();
                self.branches.retain(|u| !gone.contains(u));
                Status::Halted
            }
        }
    }
}

/// Whether removing `v` from the tree given by `parent` leaves at least two
/// pieces that contain terminals.
fn separates_terminals(v: NodeId, parent: &[NodeId], terminal: &[bool]) -> bool {
    let n = parent.len();
    let mut below = alloc::vec![0usize; n];
    // accumulate terminal counts up each root path
    for u in 0..n {
        if !terminal[u] {
            continue;
        }
        let mut at = u;
        let mut steps = 0;
        loop {
            below[at] += 1;
            if parent[at] == at || steps > n {
                break;
            }
            at = parent[at];
            steps += 1;
        }
    }
    let total = terminal.iter().filter(|&&t| t).count();
    let mut pieces = (0..n).filter(|&c| c != v && parent[c] == v && below[c] > 0).count();
    if total > below[v] {
        pieces += 1;
    }
    pieces >= 2
}

/// Prunes the spanning tree `tm` (edges in any weighting) down to a tree
/// whose leaves are terminals. `views[v]` is node `v`'s copy of the tree.
pub fn prune(
    g: &WeightedGraph,
    views: &[Vec<Edge>],
    session: &mut Session,
    label: &str,
    mode: PruneMode,
) -> Result<SteinerTree, PipelineError> {
    let n = g.node_count();
    let root = g.terminals()[0];
    let mut parents = Vec::with_capacity(n);
    for (v, view) in views.iter().enumerate() {
        parents.push(root_tree(n, view, root).ok_or(PipelineError::NotATree)?[v]);
    }
    let programs = (0..n)
        .map(|v| Pruner {
            id: v,
            terminal: g.is_terminal(v),
            parent: parents[v],
            mode,
            keep: false,
            branches: Vec::new(),
        })
        .collect();
    let done = session.run(label, programs)?;
    let mut edges = Vec::new();
    for p in &done {
        for &u in &p.branches {
            if p.id < u {
                edges.push(Edge::new(p.id, u, g.weight(p.id, u).ok_or(PipelineError::NotATree)?));
            }
        }
    }
    edges.sort_by_key(|e| (e.u, e.v));
    Ok(SteinerTree {
        edges,
        steiner_flag: done.iter().map(|p| p.keep).collect(),
        branches: done.into_iter().map(|p| p.branches).collect(),
        root,
    })
}

/// Parent pointers of the spanning tree `edges` rooted at `root`, or `None`
/// if `edges` is not a spanning tree.
fn root_tree(n: usize, edges: &[Edge], root: NodeId) -> Option<Vec<NodeId>> {
    if edges.len() + 1 != n {
        return None;
    }
    let mut adj = alloc::vec![Vec::new(); n];
    for e in edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut parent = alloc::vec![usize::MAX; n];
    parent[root] = root;
    let mut stack = alloc::vec![root];
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if parent[u] == usize::MAX {
                parent[u] = v;
                stack.push(u);
            }
        }
    }
    parent.iter().all(|&p| p != usize::MAX).then_some(parent)
}

/// A terminal-to-terminal path in the output whose interior holds no
/// terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraightPath {
    pub ends: (NodeId, NodeId),
    pub nodes: Vec<NodeId>,
    pub length: Cost,
    /// Inter-tree edges along the path.
    pub crossings: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraightPathReport {
    pub paths: Vec<StraightPath>,
    /// For each inter-tree edge `u`–`v` of the output, the distance graph edge
    /// between the two trees' terminals weighted `d(u) + w + d(v)`.
    pub terminal_links: Vec<Edge>,
}

/// All straight paths of `tz`, sorted by endpoints, and the distance graph
/// edges its inter-tree edges stand for.
pub fn extract_straight_paths(tz: &SteinerTree, g: &WeightedGraph, f: &ShortestPathForest) -> StraightPathReport {
    let mut paths = Vec::new();
    for &a in g.terminals() {
        if !tz.steiner_flag[a] {
            continue;
        }
        // (node, previous, length, crossings, path)
        let mut stack = alloc::vec![(a, usize::MAX, Cost::ZERO, 0usize, alloc::vec![a])];
        while let Some((v, prev, len, crossings, path)) = stack.pop() {
            if v != a && g.is_terminal(v) {
                if a < v {
                    paths.push(StraightPath { ends: (a, v), nodes: path, length: len, crossings });
                }
                continue;
            }
            for &u in &tz.branches[v] {
                if u == prev {
                    continue;
                }
                let w = g.weight(v, u).expect("tree edge in graph");
                let cross = usize::from(EdgeCategory::of(f, v, u) == EdgeCategory::InterTree);
                let mut next = path.clone();
                next.push(u);
                stack.push((u, v, len + w, crossings + cross, next));
            }
        }
    }
    paths.sort_by_key(|p| p.ends);
    let mut terminal_links: Vec<Edge> = tz
        .edges
        .iter()
        .filter(|e| EdgeCategory::of(f, e.u, e.v) == EdgeCategory::InterTree)
        .map(|e| Edge::new(f.source[e.u], f.source[e.v], reweight(f, *e).1))
        .collect();
    terminal_links.sort();
    StraightPathReport { paths, terminal_links }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PipelineOptions {
    pub engine: EngineConfig,
    pub prune_mode: PruneMode,
}

#[derive(Clone, Debug)]
pub struct SteinerRun {
    pub tree: SteinerTree,
    pub forest: ShortestPathForest,
    pub modified: ModifiedGraph,
    /// Spanning tree of the reweighted graph.
    pub spanning_tree: Vec<Edge>,
    pub mst_phases: Vec<PhaseRecord>,
    pub metrics: RoundMetrics,
    pub trace: Vec<TraceRecord>,
    /// Shortest path diameter, when the forest was built by relaxation.
    pub hop_diameter: Option<usize>,
}

impl SteinerRun {
    pub fn cost(&self) -> Cost {
        self.tree.cost()
    }
}

fn finish(
    g: &WeightedGraph,
    forest: ShortestPathForest,
    mut session: Session,
    opts: &PipelineOptions,
    hop_diameter: Option<usize>,
) -> Result<SteinerRun, PipelineError> {
    let modified = classify_and_reweight(g, &forest, &mut session, CLASSIFY_STEP)?;
    let mst = lotker_mst(g.node_count(), &modified.reweighted_edges(), &mut session, MST_STEP)?;
    let tree = prune(g, &mst.views, &mut session, PRUNE_STEP, opts.prune_mode)?;
    let (metrics, trace) = session.into_parts();
    Ok(SteinerRun {
        tree,
        forest,
        modified,
        spanning_tree: mst.edges,
        mst_phases: mst.phases,
        metrics,
        trace,
        hop_diameter,
    })
}

/// Pipeline with the forest read off distributed all-pairs shortest paths.
pub fn stccm_a(g: &WeightedGraph, opts: &PipelineOptions) -> Result<SteinerRun, PipelineError> {
    let mut session = Session::new(opts.engine);
    let apsp = distributed_apsp(g, &mut session, APSP_STEP)?;
    let forest = spf_from_apsp(g, &apsp.distances, &apsp.routes, &mut session, SPF_STEP)?;
    finish(g, forest, session, opts, None)
}

/// Pipeline with the forest grown by relaxation from the terminals.
pub fn stccm_b(g: &WeightedGraph, opts: &PipelineOptions) -> Result<SteinerRun, PipelineError> {
    let mut session = Session::new(opts.engine);
    let relax = spf_b_run(g, &mut session, SPF_STEP)?;
    finish(g, relax.forest, session, opts, Some(relax.hop_diameter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_graph, GeneratorParams, GraphKind};
    use crate::oracles::{brute_force_spf, complete_distance_graph, dreyfus_wagner, floyd_warshall, kruskal, tree_cost};
    use proptest::prelude::*;

    fn c(x: u64) -> Cost {
        Cost::from_units(x)
    }

    fn session() -> Session {
        Session::new(EngineConfig::default())
    }

    fn random(n: usize, t: usize, seed: u64) -> WeightedGraph {
        generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, t, 0.3, 1, 20), seed).unwrap()
    }

    fn star() -> WeightedGraph {
        WeightedGraph::new(4, [(0, 1, c(1)), (0, 2, c(1)), (0, 3, c(1))], [1, 2, 3]).unwrap()
    }

    #[test]
    fn categories_and_weights() {
        // 0 and 3 are terminals; 1 hangs off 0, 2 off 3
        let g = WeightedGraph::new(
            4,
            [(0, 1, c(2)), (1, 2, c(3)), (2, 3, c(1)), (0, 2, c(9)), (1, 3, c(8))],
            [0, 3],
        )
        .unwrap();
        let f = brute_force_spf(&g);
        assert_eq!(f.source, vec![0, 0, 3, 3]);
        let mut s = session();
        let m = classify_and_reweight(&g, &f, &mut s, "c").unwrap();
        assert_eq!(s.metrics().messages(), 2 * g.edge_count());
        assert_eq!(s.metrics().rounds(), 1);
        let get = |u, v| m.edges.iter().find(|x| x.edge.endpoints() == (u, v)).unwrap();
        assert_eq!((get(0, 1).category, get(0, 1).reweighted), (EdgeCategory::Tree, Cost::ZERO));
        assert_eq!((get(1, 2).category, get(1, 2).reweighted), (EdgeCategory::InterTree, c(6)));
        assert_eq!(get(0, 2).category, EdgeCategory::InterTree);
        assert_eq!(get(0, 2).reweighted, c(10));

        let tri = WeightedGraph::new(3, [(0, 1, c(1)), (0, 2, c(1)), (1, 2, c(1))], [0]).unwrap();
        let f = brute_force_spf(&tri);
        let m = classify_and_reweight(&tri, &f, &mut session(), "c").unwrap();
        assert_eq!(m.category(1, 2), Some(EdgeCategory::IntraTree));
        assert_eq!(m.reweighted_edges()[2].weight, Cost::INFINITY);
    }

    #[test]
    fn star_keeps_center() {
        let g = star();
        let tm: Vec<Edge> = g.edges().to_vec();
        let t = prune(&g, &vec![tm; 4], &mut session(), "p", PruneMode::Normal).unwrap();
        assert!(t.steiner_flag[0]);
        assert_eq!(t.edges.len(), 3);
        assert!(t.violations(&g).is_empty());
    }

    #[test]
    fn single_terminal_prunes_everything_else() {
        let g = WeightedGraph::new(3, [(0, 1, c(1)), (1, 2, c(1))], [0]).unwrap();
        let tm = g.edges().to_vec();
        let mut s = session();
        let t = prune(&g, &vec![tm; 3], &mut s, "p", PruneMode::Normal).unwrap();
        assert_eq!(t.steiner_flag, vec![true, false, false]);
        assert!(t.edges.is_empty());
        assert!(t.violations(&g).is_empty());
        assert_eq!(s.metrics().phase("p").unwrap().messages, 3 * 2 + 3);
    }

    #[test]
    fn broken_pruning_is_detected() {
        let g = WeightedGraph::new(3, [(0, 1, c(1)), (1, 2, c(1))], [0, 1]).unwrap();
        let t = prune(&g, &vec![g.edges().to_vec(); 3], &mut session(), "p", PruneMode::KeepAll).unwrap();
        assert!(t.violations(&g).contains(&TreeViolation::NonTerminalLeaf { node: 2 }));
    }

    #[test]
    fn non_tree_input() {
        let g = random(5, 2, 1);
        let err = prune(&g, &vec![Vec::new(); 5], &mut session(), "p", PruneMode::Normal).unwrap_err();
        assert_eq!(err, PipelineError::NotATree);
    }

    #[test]
    fn star_straight_paths() {
        let g = star();
        let run = stccm_a(&g, &PipelineOptions::default()).unwrap();
        let report = extract_straight_paths(&run.tree, &g, &run.forest);
        assert_eq!(report.paths.iter().map(|p| p.ends).collect::<Vec<_>>(), vec![(1, 2), (1, 3), (2, 3)]);
        assert!(report.paths.iter().all(|p| p.length == c(2)));
        assert_eq!(report.terminal_links.len(), 2);
        assert!(report.terminal_links.iter().all(|e| e.weight == c(2)));
    }

    #[test]
    fn single_edge_straight_path() {
        let g = WeightedGraph::new(2, [(0, 1, c(4))], [0, 1]).unwrap();
        let run = stccm_b(&g, &PipelineOptions::default()).unwrap();
        let report = extract_straight_paths(&run.tree, &g, &run.forest);
        assert_eq!(report.paths.len(), 1);
        assert_eq!(report.paths[0].length, c(4));
    }

    #[test]
    fn two_terminals_give_shortest_path() {
        let g = random(10, 2, 8);
        let z = g.terminals();
        let d = floyd_warshall(&g).dist.get(z[0], z[1]);
        for run in [stccm_a(&g, &PipelineOptions::default()), stccm_b(&g, &PipelineOptions::default())] {
            assert_eq!(run.unwrap().cost(), d);
        }
    }

    #[test]
    fn all_terminals_give_mst() {
        let g = random(9, 9, 4);
        let mst = tree_cost(&kruskal(9, g.edges()).unwrap());
        assert_eq!(stccm_a(&g, &PipelineOptions::default()).unwrap().cost(), mst);
        assert_eq!(stccm_b(&g, &PipelineOptions::default()).unwrap().cost(), mst);
    }

    #[test]
    fn path_with_terminal_ends() {
        let g = generate_graph(GraphKind::Path, &GeneratorParams::random(6, 2, 0.0, 1, 9), 5)
            .unwrap()
            .with_terminals([0, 5])
            .unwrap();
        assert_eq!(stccm_b(&g, &PipelineOptions::default()).unwrap().cost(), g.total_weight());
    }

    #[test]
    fn step_metrics_are_labelled() {
        let g = random(12, 4, 2);
        let a = stccm_a(&g, &PipelineOptions::default()).unwrap();
        let labels: Vec<&str> = a.metrics.phases().iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, vec![APSP_STEP, SPF_STEP, CLASSIFY_STEP, MST_STEP, PRUNE_STEP]);
        assert_eq!(a.metrics.phase(CLASSIFY_STEP).unwrap().messages, 2 * g.edge_count());
        let b = stccm_b(&g, &PipelineOptions::default()).unwrap();
        let labels: Vec<&str> = b.metrics.phases().iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, vec![SPF_STEP, CLASSIFY_STEP, MST_STEP, PRUNE_STEP]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn outputs_are_approximate_steiner_trees(n in 2usize..=12, t_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let t = 1 + ((n - 1) as f64 * t_frac) as usize;
            let g = random(n, t.min(6), seed);
            let opt = dreyfus_wagner(&g).unwrap();
            let kz = complete_distance_graph(&g);
            let kz_mst = tree_cost(&kruskal(kz.node_count(), kz.edges()).unwrap());
            for run in [stccm_a(&g, &PipelineOptions::default()).unwrap(), stccm_b(&g, &PipelineOptions::default()).unwrap()] {
                prop_assert!(run.tree.violations(&g).is_empty(), "{:?}", run.tree.violations(&g));
                let l = opt.leaves as u128;
                prop_assert!(l * run.cost().raw() as u128 <= 2 * (l - 1) * opt.cost.raw() as u128);
                prop_assert!(run.cost() <= kz_mst);
                let report = extract_straight_paths(&run.tree, &g, &run.forest);
                prop_assert_eq!(tree_cost(&report.terminal_links), kz_mst);
                prop_assert_eq!(report.terminal_links.len(), g.terminal_count() - 1);
            }
        }
    }
}
