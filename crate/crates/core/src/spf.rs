//! Shortest path forests: every node attached to its nearest terminal (the
//! smallest id among equidistant ones) by a shortest path.
//!
//! Two constructions: one reads the forest off all-pairs distances and
//! routing tables, the other grows it by relaxation from the terminals.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use thiserror::Error;

use crate::apsp::{DistanceMatrix, RoutingTable};
use crate::cost::Cost;
use crate::engine::{Context, EngineError, NodeProgram, Payload, SelfDelivery, Session, Status, Tag};
use crate::graph::{dijkstra, shortest_path_diameter, Edge, NodeId, WeightedGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestPathForest {
    pub source: Vec<NodeId>,
    pub distance: Vec<Cost>,
    pub parent: Vec<NodeId>,
}

impl ShortestPathForest {
    pub fn node_count(&self) -> usize {
        self.source.len()
    }

    /// The edges `(v, parent(v))` of every non-root node.
    pub fn edges(&self, g: &WeightedGraph) -> Vec<Edge> {
        let mut out: Vec<Edge> = (0..self.node_count())
            .filter(|&v| self.parent[v] != v)
            .map(|v| Edge::new(v, self.parent[v], g.weight(v, self.parent[v]).expect("parent edge exists")))
            .collect();
        out.sort_by_key(|e| (e.u, e.v));
        out
    }

    pub fn is_tree_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.parent[a] == b || self.parent[b] == a
    }

    /// One line `v source distance parent` per node.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in 0..self.node_count() {
            writeln!(out, "{} {} {} {}", v, self.source[v], self.distance[v], self.parent[v]).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpfViolation {
    WrongSize { expected: usize, found: usize },
    TerminalNotRoot { node: NodeId },
    SourceNotTerminal { node: NodeId },
    MissingParentEdge { node: NodeId },
    /// `d(v) ≠ d(parent) + w(v, parent)`.
    DistanceMismatch { node: NodeId },
    /// `v` and its parent are assigned to different trees.
    TreeOverlap { node: NodeId },
    /// Following parents from `node` never reaches a terminal.
    Cycle { node: NodeId },
    NotShortest { node: NodeId, expected: Cost, found: Cost },
}

impl fmt::Display for SpfViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpfViolation::WrongSize { expected, found } => write!(f, "forest covers {found} nodes, graph has {expected}"),
            SpfViolation::TerminalNotRoot { node } => write!(f, "terminal {node} is not the root of its own tree"),
            SpfViolation::SourceNotTerminal { node } => write!(f, "node {node} is assigned to a non-terminal"),
            SpfViolation::MissingParentEdge { node } => write!(f, "node {node} has no edge to its parent"),
            SpfViolation::DistanceMismatch { node } => write!(f, "node {node}'s distance disagrees with its parent's"),
            SpfViolation::TreeOverlap { node } => write!(f, "node {node} and its parent lie in different trees"),
            SpfViolation::Cycle { node } => write!(f, "parent chain of node {node} does not reach a terminal"),
            SpfViolation::NotShortest { node, expected, found } => {
                write!(f, "node {node} has distance {found}, nearest terminal is at {expected}")
            }
        }
    }
}

/// Checks every forest clause and returns what fails; empty iff valid.
pub fn validate_spf(f: &ShortestPathForest, g: &WeightedGraph) -> Vec<SpfViolation> {
    let n = g.node_count();
    let sizes = [f.source.len(), f.distance.len(), f.parent.len()];
    if let Some(&found) = sizes.iter().find(|&&s| s != n) {
        return alloc::vec![SpfViolation::WrongSize { expected: n, found }];
    }
    let mut out = Vec::new();
    let mut nearest = alloc::vec![Cost::INFINITY; n];
    for &z in g.terminals() {
        for (v, d) in dijkstra(g, z).into_iter().enumerate() {
            nearest[v] = nearest[v].min(d);
        }
    }
    for v in 0..n {
        let p = f.parent[v];
        if g.is_terminal(v) {
            if f.source[v] != v || f.distance[v] != Cost::ZERO || p != v {
                out.push(SpfViolation::TerminalNotRoot { node: v });
            }
            continue;
        }
        if f.source[v] >= n || !g.is_terminal(f.source[v]) {
            out.push(SpfViolation::SourceNotTerminal { node: v });
        }
        match (p < n).then(|| g.weight(v, p)).flatten() {
            None => out.push(SpfViolation::MissingParentEdge { node: v }),
            Some(w) => {
                if f.distance[p].checked_add(w) != Some(f.distance[v]) {
                    out.push(SpfViolation::DistanceMismatch { node: v });
                }
                if f.source[p] != f.source[v] {
                    out.push(SpfViolation::TreeOverlap { node: v });
                }
            }
        }
        let mut at = v;
        let mut steps = 0;
        while !g.is_terminal(at) && steps < n && f.parent[at] < n {
            at = f.parent[at];
            steps += 1;
        }
        if !g.is_terminal(at) {
            out.push(SpfViolation::Cycle { node: v });
        }
        if f.distance[v] != nearest[v] {
            out.push(SpfViolation::NotShortest { node: v, expected: nearest[v], found: f.distance[v] });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpfError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("node {node} reaches no terminal")]
    Unreachable { node: NodeId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct ParentAnnounce;

impl Payload for ParentAnnounce {
    fn tag(&self) -> Tag {
        Tag::ParentAnnounce
    }

    fn slots(&self) -> usize {
        1
    }
}

struct Announcer {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

impl NodeProgram for Announcer {
    type Msg = ParentAnnounce;

    fn step(&mut self, ctx: &mut Context<'_, ParentAnnounce>) -> Status {
        if ctx.round() == 1 {
            if let Some(p) = self.parent {
                ctx.send(p, ParentAnnounce);
            }
            return Status::Running;
        }
        self.children.extend(ctx.inbox().iter().map(|e| e.src));
        Status::Halted
    }
}

/// Builds the forest from all-pairs distances and routes: each non-terminal
/// picks its nearest terminal and the first hop toward it, then tells that
/// neighbour in one round.
pub fn spf_from_apsp(
    g: &WeightedGraph,
    d: &DistanceMatrix,
    r: &RoutingTable,
    session: &mut Session,
    label: &str,
) -> Result<ShortestPathForest, SpfError> {
    let n = g.node_count();
    let mut source = Vec::with_capacity(n);
    let mut distance = Vec::with_capacity(n);
    let mut parent = Vec::with_capacity(n);
    for v in 0..n {
        if g.is_terminal(v) {
            source.push(v);
            distance.push(Cost::ZERO);
            parent.push(v);
            continue;
        }
        // terminals are sorted, so min_by_key keeps the smallest id on ties
        let s = *g.terminals().iter().min_by_key(|&&z| d.get(v, z)).unwrap();
        let dist = d.get(v, s);
        let hop = r.next_hop(v, s).filter(|_| dist.is_finite()).ok_or(SpfError::Unreachable { node: v })?;
        source.push(s);
        distance.push(dist);
        parent.push(hop);
    }
    let programs = (0..n)
        .map(|v| Announcer { parent: (parent[v] != v).then_some(parent[v]), children: Vec::new() })
        .collect();
    let done = session.run(label, programs)?;
    debug_assert!(done.iter().enumerate().all(|(v, p)| p.children.iter().all(|&c| parent[c] == v)));
    Ok(ShortestPathForest { source, distance, parent })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelaxMsg {
    Wakeup,
    Update { id: NodeId, source: NodeId, distance: Cost, terminal: bool },
}

impl Payload for RelaxMsg {
    fn tag(&self) -> Tag {
        match self {
            RelaxMsg::Wakeup => Tag::Wakeup,
            RelaxMsg::Update { .. } => Tag::Update,
        }
    }

    fn slots(&self) -> usize {
        match self {
            RelaxMsg::Wakeup => 0,
            RelaxMsg::Update { .. } => 4,
        }
    }
}

/// Per-node relaxation state.
#[derive(Clone, Debug)]
pub struct RelaxNode {
    pub id: NodeId,
    pub source: NodeId,
    pub distance: Cost,
    pub parent: NodeId,
    pub terminal: bool,
    /// Links over which a terminal's update arrived; never used again.
    pub blocked: Vec<bool>,
    /// `distance` after each executed step.
    pub history: Vec<Cost>,
    links: Vec<Cost>,
}

impl RelaxNode {
    fn new(g: &WeightedGraph, id: NodeId) -> Self {
        let terminal = g.is_terminal(id);
        let n = g.node_count();
        RelaxNode {
            id,
            source: id,
            distance: if terminal { Cost::ZERO } else { Cost::INFINITY },
            parent: id,
            terminal,
            blocked: alloc::vec![false; n],
            history: Vec::new(),
            links: (0..n).map(|u| g.link_weight(id, u)).collect(),
        }
    }

    fn update(&self) -> RelaxMsg {
        RelaxMsg::Update { id: self.id, source: self.source, distance: self.distance, terminal: self.terminal }
    }
}

impl NodeProgram for RelaxNode {
    type Msg = RelaxMsg;

    fn step(&mut self, ctx: &mut Context<'_, RelaxMsg>) -> Status {
        let status = self.relax(ctx);
        self.history.push(self.distance);
        status
    }
}

impl RelaxNode {
    fn relax(&mut self, ctx: &mut Context<'_, RelaxMsg>) -> Status {
        if ctx.round() == 1 {
            if self.id == 0 {
                ctx.broadcast(RelaxMsg::Wakeup, SelfDelivery::Include);
            }
            return Status::Running;
        }
        if ctx.inbox().iter().any(|e| e.payload == RelaxMsg::Wakeup) {
            if self.terminal {
                // one burst, then silence
                ctx.broadcast(self.update(), SelfDelivery::Include);
                return Status::Halted;
            }
            return Status::Running;
        }

        let mut best: Option<(Cost, NodeId, NodeId)> = None;
        for env in ctx.inbox() {
            let RelaxMsg::Update { id, source, distance, terminal } = env.payload else {
                continue;
            };
            if terminal {
                self.blocked[id] = true;
            }
            let Some(through) = distance.checked_add(self.links[id]).filter(|c| c.is_finite()) else {
                continue;
            };
            let cand = (through, source, id);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
        if let Some((distance, source, via)) = best {
            if (distance, source) < (self.distance, self.source) || self.distance.is_infinite() {
                self.distance = distance;
                self.source = source;
                self.parent = via;
                let msg = self.update();
                for u in 0..ctx.n() {
                    if u != self.id && !self.blocked[u] {
                        ctx.send(u, msg.clone());
                    }
                }
            }
        }
        Status::Running
    }
}

#[derive(Clone, Debug)]
pub struct RelaxRun {
    pub forest: ShortestPathForest,
    pub nodes: Vec<RelaxNode>,
    /// Shortest path diameter used for the round limit.
    pub hop_diameter: usize,
    pub rounds: usize,
    pub messages: usize,
}

/// Grows the forest by relaxation from the terminals. Node 0 wakes every
/// node, each terminal announces itself once, and non-terminals rebroadcast
/// whenever their `(distance, source)` pair improves. Runs at most `S + 3`
/// rounds, where `S` is the shortest path diameter.
pub fn spf_b_run(g: &WeightedGraph, session: &mut Session, label: &str) -> Result<RelaxRun, SpfError> {
    let n = g.node_count();
    let hop_diameter = shortest_path_diameter(g);
    let before = session.metrics().clone();
    let programs = (0..n).map(|v| RelaxNode::new(g, v)).collect();
    let nodes = session.run_bounded(label, programs, hop_diameter + 3)?;
    let rounds = session.metrics().rounds() - before.rounds();
    let messages = session.metrics().messages() - before.messages();
    if let Some(v) = nodes.iter().find(|v| v.distance.is_infinite()) {
        return Err(SpfError::Unreachable { node: v.id });
    }
    let forest = ShortestPathForest {
        source: nodes.iter().map(|v| v.source).collect(),
        distance: nodes.iter().map(|v| v.distance).collect(),
        parent: nodes.iter().map(|v| v.parent).collect(),
    };
    Ok(RelaxRun { forest, nodes, hop_diameter, rounds, messages })
}

/// Message ceiling for the relaxation run: `(S + 2)(n − t)² + n·t + n`.
pub fn relax_message_bound(n: usize, t: usize, hop_diameter: usize) -> usize {
    (hop_diameter + 2) * (n - t) * (n - t) + n * t + n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apsp::iterated_squaring;
    use crate::engine::{EngineConfig, Tag};
    use crate::generate::{generate_graph, GeneratorParams, GraphKind};
    use proptest::prelude::*;

    fn c(x: u64) -> Cost {
        Cost::from_units(x)
    }

    fn session() -> Session {
        Session::new(EngineConfig { trace: true, ..EngineConfig::default() })
    }

    fn forest_a(g: &WeightedGraph) -> ShortestPathForest {
        let (d, r) = iterated_squaring(&DistanceMatrix::weights_of(g));
        spf_from_apsp(g, &d, &r, &mut session(), "spf").unwrap()
    }

    /// Nearest terminal by Dijkstra from each terminal, smallest id on ties.
    fn nearest(g: &WeightedGraph) -> (Vec<NodeId>, Vec<Cost>) {
        let n = g.node_count();
        let mut best = alloc::vec![(Cost::INFINITY, usize::MAX); n];
        for &z in g.terminals() {
            for (v, d) in dijkstra(g, z).into_iter().enumerate() {
                best[v] = best[v].min((d, z));
            }
        }
        (best.iter().map(|b| b.1).collect(), best.iter().map(|b| b.0).collect())
    }

    fn random(n: usize, t: usize, seed: u64) -> WeightedGraph {
        generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, t, 0.3, 1, 20), seed).unwrap()
    }

    #[test]
    fn all_terminals_is_trivial() {
        let g = generate_graph(GraphKind::Complete, &GeneratorParams::unit(4, 4), 0).unwrap();
        let f = forest_a(&g);
        assert_eq!(f.distance, vec![Cost::ZERO; 4]);
        assert_eq!(f.parent, vec![0, 1, 2, 3]);
        let b = spf_b_run(&g, &mut session(), "spf").unwrap();
        assert_eq!(b.forest, f);
    }

    #[test]
    fn single_terminal_is_dijkstra_tree() {
        let g = random(10, 1, 5);
        let f = forest_a(&g);
        assert_eq!(f.distance, dijkstra(&g, g.terminals()[0]));
        assert!(validate_spf(&f, &g).is_empty());
    }

    #[test]
    fn equidistant_node_takes_smaller_terminal() {
        let g = WeightedGraph::new(3, [(0, 2, c(5)), (2, 1, c(5))], [1, 0]).unwrap();
        let f = forest_a(&g);
        assert_eq!((f.source[2], f.distance[2]), (0, c(5)));
        let b = spf_b_run(&g, &mut session(), "spf").unwrap();
        assert_eq!(b.forest, f);
    }

    #[test]
    fn parent_announcement_is_one_round() {
        let g = random(9, 3, 2);
        let (d, r) = iterated_squaring(&DistanceMatrix::weights_of(&g));
        let mut s = session();
        spf_from_apsp(&g, &d, &r, &mut s, "spf").unwrap();
        assert_eq!(s.metrics().rounds(), 1);
        assert_eq!(s.metrics().messages(), 9 - 3);
    }

    #[test]
    fn relaxation_on_unit_path() {
        let g = WeightedGraph::new(3, [(0, 1, c(1)), (1, 2, c(1))], [0]).unwrap();
        let run = spf_b_run(&g, &mut session(), "spf").unwrap();
        assert_eq!(run.forest.distance, vec![c(0), c(1), c(2)]);
        assert_eq!(run.forest.parent, vec![0, 0, 1]);
        assert!(run.rounds <= 4);
    }

    #[test]
    fn injected_faults_are_reported() {
        let g = random(8, 2, 9);
        let good = forest_a(&g);
        assert!(validate_spf(&good, &g).is_empty());

        let v = (0..8).find(|&v| !g.is_terminal(v)).unwrap();
        let mut bad = good.clone();
        bad.distance[v] = bad.distance[v] + c(1);
        let found = validate_spf(&bad, &g);
        assert!(found.contains(&SpfViolation::DistanceMismatch { node: v }), "{found:?}");

        let mut shared = good.clone();
        let other = *g.terminals().iter().find(|&&z| z != good.source[v]).unwrap();
        shared.source[v] = other;
        assert!(validate_spf(&shared, &g).contains(&SpfViolation::TreeOverlap { node: v }));

        let mut root = good.clone();
        let z = g.terminals()[0];
        root.parent[z] = g.neighbors(z)[0].0;
        assert!(validate_spf(&root, &g).contains(&SpfViolation::TerminalNotRoot { node: z }));
    }

    #[test]
    fn dump_format() {
        let g = WeightedGraph::new(2, [(0, 1, Cost::parse_decimal("2.5").unwrap())], [0]).unwrap();
        assert_eq!(forest_a(&g).dump(), "0 0 0 0\n1 0 2.5 0\n");
    }

    #[test]
    fn terminals_fall_silent_after_their_burst() {
        let g = random(10, 3, 4);
        let mut s = session();
        spf_b_run(&g, &mut s, "spf").unwrap();
        for rec in s.trace() {
            if rec.round == 1 {
                assert_eq!((rec.src, rec.tag), (0, Tag::Wakeup));
            } else if g.is_terminal(rec.src) {
                assert_eq!((rec.round, rec.tag), (2, Tag::Update));
            }
            if rec.round > 3 {
                assert!(!g.is_terminal(rec.dst), "late message to terminal {rec}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn constructions_agree(n in 1usize..13, t_frac in 0.0f64..1.0, seed in any::<u64>(), density in 0.0f64..0.6) {
            let t = 1 + ((n - 1) as f64 * t_frac) as usize;
            let g = generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, t, density, 1, 20), seed).unwrap();
            let a = forest_a(&g);
            let mut s = session();
            let b = spf_b_run(&g, &mut s, "spf").unwrap();
            let (src, dist) = nearest(&g);
            prop_assert_eq!(&a.source, &src);
            prop_assert_eq!(&a.distance, &dist);
            prop_assert_eq!(&b.forest.source, &src);
            prop_assert_eq!(&b.forest.distance, &dist);
            prop_assert!(validate_spf(&a, &g).is_empty());
            prop_assert!(validate_spf(&b.forest, &g).is_empty());
            prop_assert!(b.rounds <= b.hop_diameter + 2, "rounds {} S {}", b.rounds, b.hop_diameter);
            prop_assert!(b.messages <= relax_message_bound(n, t, b.hop_diameter));
            for node in &b.nodes {
                prop_assert!(node.history.windows(2).all(|w| w[1] <= w[0]));
            }
            let again = spf_b_run(&g, &mut session(), "spf").unwrap();
            prop_assert_eq!(again.forest, b.forest);
        }
    }
}
