//! Deterministic minimum spanning tree in the congested clique with doubly
//! exponential cluster growth per phase.
//!
//! Clusters are subtrees of the final tree; the smallest member of a cluster
//! is its leader and `N` is the size of the smallest cluster. One phase takes
//! six rounds:
//!
//! 1. every node sends, to the leader of each other cluster, its lightest edge
//!    into that cluster;
//! 2. each leader forwards the per-cluster minimum to the other cluster's
//!    leader, so every leader learns its lightest edge to every other cluster;
//! 3. each leader hands its `N` lightest such edges to its members, one each;
//! 4. members forward them to node 0;
//! 5. node 0 merges clusters locally under the safety rule and hands the i-th
//!    selected edge to node i;
//! 6. node i broadcasts it.
//!
//! Nodes halt once a single cluster remains.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dsu::DisjointSets;
use crate::engine::{Context, EngineError, NodeProgram, Payload, SelfDelivery, Session, Status, Tag};
use crate::graph::{Edge, NodeId};

const COORDINATOR: NodeId = 0;
const ROUNDS_PER_PHASE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MstError {
    #[error("finite-weight edges do not connect all {n} nodes")]
    Disconnected { n: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Upper bound on the number of phases: `⌈log₂ log₂ n⌉ + 1`.
pub fn phase_bound(n: usize) -> usize {
    let mut k = 0;
    // smallest k with 2^(2^k) ≥ n
    while k < 6 && (1u128 << (1u32 << k)) < n as u128 {
        k += 1;
    }
    k + 1
}

/// Cluster of every node, identified by its smallest member.
pub fn clusters_of(n: usize, tree_edges: &[Edge]) -> Vec<NodeId> {
    let mut sets = DisjointSets::new(n);
    for e in tree_edges {
        sets.union(e.u, e.v);
    }
    let mut leader = alloc::vec![usize::MAX; n];
    let mut out = alloc::vec![0; n];
    for v in 0..n {
        let r = sets.find(v);
        if leader[r] == usize::MAX {
            leader[r] = v;
        }
        out[v] = leader[r];
    }
    out
}

fn cluster_sizes(cluster_of: &[NodeId]) -> BTreeMap<NodeId, usize> {
    let mut sizes = BTreeMap::new();
    for &c in cluster_of {
        *sizes.entry(c).or_insert(0) += 1;
    }
    sizes
}

/// The `n_lightest` lightest edges from `cluster` to distinct other clusters,
/// keeping only the lightest edge toward each cluster.
pub fn collect_n_lightest(edges: &[Edge], cluster_of: &[NodeId], cluster: NodeId, n_lightest: usize) -> Vec<Edge> {
    let mut best: BTreeMap<NodeId, Edge> = BTreeMap::new();
    for e in edges.iter().filter(|e| e.weight.is_finite()) {
        let (a, b) = (cluster_of[e.u], cluster_of[e.v]);
        let other = match (a == cluster, b == cluster) {
            (true, false) => b,
            (false, true) => a,
            _ => continue,
        };
        let slot = best.entry(other).or_insert(*e);
        if *e < *slot {
            *slot = *e;
        }
    }
    let mut out: Vec<Edge> = best.into_values().collect();
    out.sort();
    out.truncate(n_lightest);
    out
}

/// One cluster's reported lightest edges, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterList {
    pub cluster: NodeId,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeOutcome {
    /// Accepted edges in acceptance order.
    pub selected: Vec<Edge>,
    /// Known edges that were inspected and turned down.
    pub rejected: Vec<Edge>,
}

/// Merges clusters along the reported edges in the global edge order. A
/// cluster whose list holds `n_lightest` edges, all of them inspected, is
/// exhausted; a fragment containing one is unsafe, because its lightest
/// outgoing edge may be missing from the picture. An edge between two
/// fragments is taken iff at least one of them is still safe, which makes it
/// that fragment's lightest outgoing edge.
pub fn merge_with_safety_rule(lists: &[ClusterList], cluster_of: &[NodeId], n_lightest: usize) -> MergeOutcome {
    let n = cluster_of.len();
    let mut reported: BTreeMap<NodeId, &[Edge]> = BTreeMap::new();
    let mut known: Vec<Edge> = Vec::new();
    for list in lists {
        debug_assert!(list.edges.windows(2).all(|w| w[0] < w[1]));
        reported.insert(list.cluster, &list.edges);
        known.extend_from_slice(&list.edges);
    }
    known.sort();
    known.dedup();

    let mut inspected: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut fragments = DisjointSets::new(n);
    let mut exhausted = alloc::vec![0usize; n];
    let mut selected = Vec::new();
    let mut rejected = Vec::new();

    for e in known {
        let (a, b) = (cluster_of[e.u], cluster_of[e.v]);
        let (fa, fb) = (fragments.find(a), fragments.find(b));
        if fa != fb && (exhausted[fa] == 0 || exhausted[fb] == 0) {
            fragments.union(fa, fb);
            let root = fragments.find(fa);
            exhausted[root] = exhausted[fa] + exhausted[fb];
            selected.push(e);
        } else {
            rejected.push(e);
        }
        for c in [a, b] {
            let Some(list) = reported.get(&c) else { continue };
            let seen = inspected.entry(c).or_insert(0);
            if *seen < list.len() && list[*seen] == e {
                *seen += 1;
                if *seen == n_lightest && list.len() == n_lightest {
                    let root = fragments.find(c);
                    exhausted[root] += 1;
                }
            }
        }
    }
    MergeOutcome { selected, rejected }
}

/// Coordinator's view of one phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseRecord {
    /// 1-based phase index.
    pub phase: usize,
    pub n_lightest: usize,
    pub cluster_count: usize,
    /// Cluster of every node at the start of the phase.
    pub clusters: Vec<NodeId>,
    pub lists: Vec<ClusterList>,
    /// Edges selected in the phase, in acceptance order.
    pub selected: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MstMsg {
    /// A node's lightest edge into the receiving leader's cluster.
    Probe(Edge),
    /// Lightest edge between the receiver's cluster and the sender's.
    ClusterBest(Edge),
    /// One of the leader's lightest edges, delegated to a member.
    Assigned { cluster: NodeId, edge: Edge },
    Forward { cluster: NodeId, edge: Edge },
    Selected(Edge),
    Announce(Edge),
}

impl Payload for MstMsg {
    fn tag(&self) -> Tag {
        match self {
            MstMsg::Selected(_) | MstMsg::Announce(_) => Tag::MstEdgeAnnounce,
            _ => Tag::MstCandidate,
        }
    }

    fn slots(&self) -> usize {
        match self {
            MstMsg::Assigned { .. } | MstMsg::Forward { .. } => 4,
            _ => 3,
        }
    }
}

/// Per-node state of the MST run.
#[derive(Clone, Debug)]
pub struct MstNode {
    pub id: NodeId,
    incident: Vec<Edge>,
    /// Tree edges this node knows about.
    pub known: Vec<Edge>,
    cluster_of: Vec<NodeId>,
    n_lightest: usize,
    pub phases: Vec<PhaseRecord>,
}

impl MstNode {
    fn new(id: NodeId, n: usize, incident: Vec<Edge>) -> Self {
        MstNode {
            id,
            incident,
            known: Vec::new(),
            cluster_of: (0..n).collect(),
            n_lightest: 1,
            phases: Vec::new(),
        }
    }

    fn absorb(&mut self, inbox: &[crate::engine::Envelope<MstMsg>]) {
        for env in inbox {
            if let MstMsg::Announce(e) = env.payload {
                self.known.push(e);
            }
        }
    }
}

impl NodeProgram for MstNode {
    type Msg = MstMsg;

    fn step(&mut self, ctx: &mut Context<'_, MstMsg>) -> Status {
        let n = ctx.n();
        match (ctx.round() - 1) % ROUNDS_PER_PHASE {
            0 => {
                self.absorb(ctx.inbox());
                self.cluster_of = clusters_of(n, &self.known);
                let sizes = cluster_sizes(&self.cluster_of);
                if sizes.len() == 1 {
                    return Status::Halted;
                }
                self.n_lightest = *sizes.values().min().unwrap();
                let mine = self.cluster_of[self.id];
                let mut best: BTreeMap<NodeId, Edge> = BTreeMap::new();
                for e in &self.incident {
                    let other = self.cluster_of[e.other(self.id)];
                    if other != mine {
                        let slot = best.entry(other).or_insert(*e);
                        if *e < *slot {
                            *slot = *e;
                        }
                    }
                }
                for (leader, e) in best {
                    ctx.send(leader, MstMsg::Probe(e));
                }
            }
            1 => {
                let mut best: BTreeMap<NodeId, Edge> = BTreeMap::new();
                for env in ctx.inbox() {
                    if let MstMsg::Probe(e) = env.payload {
                        let slot = best.entry(self.cluster_of[env.src]).or_insert(e);
                        if e < *slot {
                            *slot = e;
                        }
                    }
                }
                for (leader, e) in best {
                    ctx.send(leader, MstMsg::ClusterBest(e));
                }
            }
            2 => {
                let mut lightest: Vec<Edge> = ctx
                    .inbox()
                    .iter()
                    .filter_map(|env| match env.payload {
                        MstMsg::ClusterBest(e) => Some(e),
                        _ => None,
                    })
                    .collect();
                lightest.sort();
                lightest.truncate(self.n_lightest);
                let members = (0..n).filter(|&v| self.cluster_of[v] == self.id);
                for (edge, member) in lightest.into_iter().zip(members) {
                    ctx.send(member, MstMsg::Assigned { cluster: self.id, edge });
                }
            }
            3 => {
                for env in ctx.inbox() {
                    if let MstMsg::Assigned { cluster, edge } = env.payload {
                        ctx.send(COORDINATOR, MstMsg::Forward { cluster, edge });
                    }
                }
            }
            4 => {
                if self.id != COORDINATOR {
                    return Status::Running;
                }
                let mut lists: BTreeMap<NodeId, Vec<Edge>> = BTreeMap::new();
                for env in ctx.inbox() {
                    if let MstMsg::Forward { cluster, edge } = env.payload {
                        lists.entry(cluster).or_default().push(edge);
                    }
                }
                let lists: Vec<ClusterList> = lists
                    .into_iter()
                    .map(|(cluster, mut edges)| {
                        edges.sort();
                        ClusterList { cluster, edges }
                    })
                    .collect();
                let outcome = merge_with_safety_rule(&lists, &self.cluster_of, self.n_lightest);
                for (i, &e) in outcome.selected.iter().enumerate() {
                    ctx.send(i, MstMsg::Selected(e));
                }
                self.phases.push(PhaseRecord {
                    phase: self.phases.len() + 1,
                    n_lightest: self.n_lightest,
                    cluster_count: cluster_sizes(&self.cluster_of).len(),
                    clusters: self.cluster_of.clone(),
                    lists,
                    selected: outcome.selected,
                });
            }
            _ => {
                for env in ctx.inbox() {
                    if let MstMsg::Selected(e) = env.payload {
                        self.known.push(e);
                        ctx.broadcast(MstMsg::Announce(e), SelfDelivery::Exclude);
                    }
                }
            }
        }
        Status::Running
    }
}

#[derive(Clone, Debug)]
pub struct MstRun {
    /// Tree edges sorted by the global edge order.
    pub edges: Vec<Edge>,
    pub phases: Vec<PhaseRecord>,
    /// Every node's final tree, sorted.
    pub views: Vec<Vec<Edge>>,
    pub rounds: usize,
    pub messages: usize,
}

impl MstRun {
    /// Smallest cluster size after each phase.
    pub fn min_cluster_sizes(&self) -> Vec<usize> {
        let n = self.views.len();
        let mut so_far = Vec::new();
        self.phases
            .iter()
            .map(|p| {
                so_far.extend_from_slice(&p.selected);
                *cluster_sizes(&clusters_of(n, &so_far)).values().min().unwrap()
            })
            .collect()
    }
}

/// Minimum spanning tree of the finite edges among `n` nodes.
pub fn lotker_mst(n: usize, edges: &[Edge], session: &mut Session, label: &str) -> Result<MstRun, MstError> {
    let finite: Vec<Edge> = edges.iter().copied().filter(|e| e.weight.is_finite()).collect();
    let mut check = DisjointSets::new(n);
    let components = n - finite.iter().filter(|e| check.union(e.u, e.v)).count();
    if components != 1 {
        return Err(MstError::Disconnected { n });
    }
    let mut incident = alloc::vec![Vec::new(); n];
    for e in &finite {
        incident[e.u].push(*e);
        incident[e.v].push(*e);
    }
    let before = session.metrics().clone();
    let programs = incident.into_iter().enumerate().map(|(v, inc)| MstNode::new(v, n, inc)).collect();
    let mut nodes = session.run(label, programs)?;
    let rounds = session.metrics().rounds() - before.rounds();
    let messages = session.metrics().messages() - before.messages();

    let views: Vec<Vec<Edge>> = nodes
        .iter()
        .map(|node| {
            let mut v = node.known.clone();
            v.sort();
            v
        })
        .collect();
    let phases = core::mem::take(&mut nodes[COORDINATOR].phases);
    let edges = views[COORDINATOR].clone();
    if edges.len() + 1 != n {
        return Err(MstError::Disconnected { n });
    }
    Ok(MstRun { edges, phases, views, rounds, messages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Cost;
    use crate::engine::EngineConfig;
    use crate::generate::{generate_graph, GeneratorParams, GraphKind};
    use crate::oracles::kruskal;
    use proptest::prelude::*;

    fn c(x: u64) -> Cost {
        Cost::from_units(x)
    }

    fn run(n: usize, edges: &[Edge]) -> MstRun {
        lotker_mst(n, edges, &mut Session::new(EngineConfig::default()), "mst").unwrap()
    }

    /// Every selected edge is the lightest edge leaving one of the two
    /// fragments it joins at the moment it is selected.
    fn check_cut_property(n: usize, edges: &[Edge], r: &MstRun) {
        let mut tree = Vec::new();
        for p in &r.phases {
            for &e in &p.selected {
                let frag = clusters_of(n, &tree);
                let leaving = |f: NodeId| {
                    edges
                        .iter()
                        .filter(|x| x.weight.is_finite() && (frag[x.u] == f) != (frag[x.v] == f))
                        .min()
                        .copied()
                };
                assert!(
                    leaving(frag[e.u]) == Some(e) || leaving(frag[e.v]) == Some(e),
                    "{e:?} is not a lightest outgoing edge"
                );
                tree.push(e);
            }
        }
    }

    #[test]
    fn two_nodes() {
        let e = [Edge::new(0, 1, c(4))];
        let r = run(2, &e);
        assert_eq!(r.edges, e.to_vec());
        assert_eq!(r.phases.len(), 1);
    }

    #[test]
    fn single_node() {
        let r = run(1, &[]);
        assert!(r.edges.is_empty());
        assert_eq!((r.rounds, r.messages), (0, 0));
    }

    #[test]
    fn disconnected_finite_part() {
        let e = [Edge::new(0, 1, c(1)), Edge::new(1, 2, Cost::INFINITY)];
        let err = lotker_mst(3, &e, &mut Session::new(EngineConfig::default()), "mst").unwrap_err();
        assert_eq!(err, MstError::Disconnected { n: 3 });
    }

    #[test]
    fn phase_bounds() {
        assert_eq!(phase_bound(2), 1);
        assert_eq!(phase_bound(4), 2);
        assert_eq!(phase_bound(5), 3);
        assert_eq!(phase_bound(16), 3);
        assert_eq!(phase_bound(17), 4);
        assert_eq!(phase_bound(64), 4);
    }

    #[test]
    fn singleton_lists_are_lightest_incident_edges() {
        let edges = [Edge::new(0, 1, c(3)), Edge::new(1, 2, c(1)), Edge::new(0, 2, c(2))];
        let cl: Vec<NodeId> = (0..3).collect();
        assert_eq!(collect_n_lightest(&edges, &cl, 0, 1), vec![edges[2]]);
        assert_eq!(collect_n_lightest(&edges, &cl, 1, 1), vec![edges[1]]);
    }

    #[test]
    fn fewer_neighbours_than_requested() {
        let edges = [Edge::new(0, 1, c(1)), Edge::new(1, 2, c(1))];
        assert_eq!(collect_n_lightest(&edges, &[0, 0, 2], 0, 2), vec![edges[1]]);
    }

    #[test]
    fn star_keeps_two_lightest() {
        let edges = [Edge::new(0, 1, c(3)), Edge::new(0, 2, c(1)), Edge::new(0, 3, c(2))];
        let got = collect_n_lightest(&edges, &[0, 1, 2, 3], 0, 2);
        assert_eq!(got, vec![edges[1], edges[2]]);
    }

    #[test]
    fn merge_two_singletons() {
        let e = Edge::new(0, 1, c(5));
        let lists = [ClusterList { cluster: 0, edges: vec![e] }, ClusterList { cluster: 1, edges: vec![e] }];
        assert_eq!(merge_with_safety_rule(&lists, &[0, 1], 1).selected, vec![e]);
    }

    #[test]
    fn merge_short_path_with_one_edge_lists() {
        let (a, b) = (Edge::new(0, 1, c(1)), Edge::new(1, 2, c(2)));
        let lists = [
            ClusterList { cluster: 0, edges: vec![a] },
            ClusterList { cluster: 1, edges: vec![a] },
            ClusterList { cluster: 2, edges: vec![b] },
        ];
        // node 1's only reported edge is spent on the first merge, but node 2
        // has not inspected its own yet, so the second edge is still safe
        let out = merge_with_safety_rule(&lists, &[0, 1, 2], 1);
        assert_eq!(out.selected, vec![a, b]);
        let r = run(3, &[a, b]);
        assert_eq!(r.edges, kruskal(3, &[a, b]).unwrap());
    }

    #[test]
    fn merge_rejects_cycle_closing_edge() {
        let a = Edge::new(0, 1, c(1));
        let b = Edge::new(1, 2, c(2));
        let cc = Edge::new(2, 3, c(3));
        let d = Edge::new(0, 3, c(4));
        let lists = [
            ClusterList { cluster: 0, edges: vec![a, d] },
            ClusterList { cluster: 1, edges: vec![a, b] },
            ClusterList { cluster: 2, edges: vec![b, cc] },
            ClusterList { cluster: 3, edges: vec![cc, d] },
        ];
        let out = merge_with_safety_rule(&lists, &[0, 1, 2, 3], 2);
        assert_eq!(out.selected, vec![a, b, cc]);
        assert_eq!(out.rejected, vec![d]);
    }

    #[test]
    fn unsafe_pair_waits() {
        // both singletons have spent their only entry; the edge between the
        // merged pair and node 2 is unknown to both lists' owners and waits
        let a = Edge::new(0, 1, c(1));
        let b = Edge::new(2, 3, c(1));
        let x = Edge::new(1, 2, c(5));
        let lists = [
            ClusterList { cluster: 0, edges: vec![a] },
            ClusterList { cluster: 1, edges: vec![a] },
            ClusterList { cluster: 2, edges: vec![b] },
            ClusterList { cluster: 3, edges: vec![b] },
        ];
        let out = merge_with_safety_rule(&lists, &[0, 1, 2, 3], 1);
        assert_eq!(out.selected, vec![a, b]);
        let r = run(4, &[a, b, x]);
        assert_eq!(r.edges, vec![a, b, x]);
        assert_eq!(r.phases.len(), 2);
    }

    #[test]
    fn random_graph_matches_kruskal() {
        let g = generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(16, 1, 0.4, 1, 50), 7).unwrap();
        let r = run(16, g.edges());
        assert_eq!(r.edges, kruskal(16, g.edges()).unwrap());
        let sizes = r.min_cluster_sizes();
        assert!(sizes[0] >= 2);
        if sizes.len() > 1 {
            assert!(sizes[1] >= 4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn agrees_with_kruskal(n in 2usize..40, seed in any::<u64>(), density in 0.0f64..1.0, wmax in 1u64..30) {
            let g = generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, 1, density, 1, wmax), seed).unwrap();
            let r = run(n, g.edges());
            prop_assert_eq!(&r.edges, &kruskal(n, g.edges()).unwrap());
            prop_assert!(r.phases.len() <= phase_bound(n));
            prop_assert_eq!(r.rounds, ROUNDS_PER_PHASE * r.phases.len());
            for (k, size) in r.min_cluster_sizes().into_iter().enumerate() {
                prop_assert!(size == n || size as u128 >= 1u128 << (1u32 << k).min(100), "phase {} size {}", k + 1, size);
            }
            for view in &r.views {
                prop_assert_eq!(view, &r.edges);
            }
            prop_assert!(r.messages <= 5 * n * n);
            check_cut_property(n, g.edges(), &r);
        }
    }
}
