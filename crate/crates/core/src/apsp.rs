//! All-pairs shortest paths by repeated min-plus squaring of the weight
//! matrix, locally and as a distributed clique computation.

use alloc::vec::Vec;
use core::fmt;

use crate::cost::Cost;
use crate::engine::{exchange, route_balanced, EngineError, Payload, Schedule, Session, Tag};
use crate::graph::{NodeId, WeightedGraph};

/// Square matrix of extended weights.
#[derive(Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    cells: Vec<Cost>,
}

impl DistanceMatrix {
    /// Zero diagonal, infinity elsewhere: the min-plus identity.
    pub fn identity(n: usize) -> Self {
        let mut cells = alloc::vec![Cost::INFINITY; n * n];
        for u in 0..n {
            cells[u * n + u] = Cost::ZERO;
        }
        DistanceMatrix { n, cells }
    }

    pub fn from_rows(rows: Vec<Vec<Cost>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        DistanceMatrix { n, cells: rows.into_iter().flatten().collect() }
    }

    /// The weight matrix of `g`.
    pub fn weights_of(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        let mut m = Self::identity(n);
        for e in g.edges() {
            m.set(e.u, e.v, e.weight);
            m.set(e.v, e.u, e.weight);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Cost {
        self.cells[u * self.n + v]
    }

    pub fn set(&mut self, u: NodeId, v: NodeId, c: Cost) {
        self.cells[u * self.n + v] = c;
    }

    pub fn row(&self, u: NodeId) -> &[Cost] {
        &self.cells[u * self.n..(u + 1) * self.n]
    }
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.n).map(|u| self.row(u))).finish()
    }
}

/// Per-entry minimizing intermediate node of a min-plus product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessMatrix {
    n: usize,
    cells: Vec<Option<NodeId>>,
}

impl WitnessMatrix {
    pub fn get(&self, u: NodeId, v: NodeId) -> Option<NodeId> {
        self.cells[u * self.n + v]
    }
}

/// `next_hop(u, v)` is the neighbour of `u` on a shortest `u`–`v` path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingTable {
    n: usize,
    cells: Vec<Option<NodeId>>,
}

impl RoutingTable {
    /// Direct routes along every finite off-diagonal entry of `w`.
    pub fn direct(w: &DistanceMatrix) -> Self {
        let n = w.n();
        let mut cells = alloc::vec![None; n * n];
        for u in 0..n {
            for v in 0..n {
                if u != v && w.get(u, v).is_finite() {
                    cells[u * n + v] = Some(v);
                }
            }
        }
        RoutingTable { n, cells }
    }

    pub fn from_rows(rows: Vec<Vec<Option<NodeId>>>) -> Self {
        let n = rows.len();
        RoutingTable { n, cells: rows.into_iter().flatten().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn next_hop(&self, u: NodeId, v: NodeId) -> Option<NodeId> {
        self.cells[u * self.n + v]
    }

    pub fn row(&self, u: NodeId) -> &[Option<NodeId>] {
        &self.cells[u * self.n..(u + 1) * self.n]
    }

    /// Follows next hops from `u` to `v` in `g`, returning the path. `None` if
    /// a hop is missing, is not an edge, or the walk exceeds `n − 1` hops.
    pub fn walk(&self, g: &WeightedGraph, u: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        let mut path = alloc::vec![u];
        let mut at = u;
        while at != v {
            if path.len() > self.n {
                return None;
            }
            let next = self.next_hop(at, v)?;
            g.weight(at, next)?;
            path.push(next);
            at = next;
        }
        Some(path)
    }
}

/// `C[u][v] = min_w A[u][w] + B[w][v]` with the smallest minimizing `w` as
/// witness. Infinite entries have no witness.
pub fn minplus_product(a: &DistanceMatrix, b: &DistanceMatrix) -> (DistanceMatrix, WitnessMatrix) {
    let n = a.n();
    assert_eq!(n, b.n(), "matrices must be conformable");
    let mut c = DistanceMatrix { n, cells: alloc::vec![Cost::INFINITY; n * n] };
    let mut q = WitnessMatrix { n, cells: alloc::vec![None; n * n] };
    for u in 0..n {
        for w in 0..n {
            let left = a.get(u, w);
            if left.is_infinite() {
                continue;
            }
            for v in 0..n {
                let sum = left + b.get(w, v);
                if sum < c.get(u, v) {
                    c.set(u, v, sum);
                    q.cells[u * n + v] = Some(w);
                }
            }
        }
    }
    (c, q)
}

/// Number of squarings needed for paths of up to `n − 1` hops.
pub fn squaring_count(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Applies one squaring result to the current distances and routes: entries
/// that strictly improved take the route toward their witness.
fn absorb_row(
    row: &mut [Cost],
    routes: &mut [Option<NodeId>],
    product: impl Iterator<Item = (Cost, Option<NodeId>)>,
) {
    let old_routes: Vec<Option<NodeId>> = routes.to_vec();
    for (v, (value, witness)) in product.enumerate() {
        if value < row[v] {
            let w = witness.expect("finite product has a witness");
            row[v] = value;
            routes[v] = old_routes[w];
        }
    }
}

/// Shortest distances and routes by `⌈log₂ n⌉` squarings of `w`.
pub fn iterated_squaring(w: &DistanceMatrix) -> (DistanceMatrix, RoutingTable) {
    let n = w.n();
    let mut d = w.clone();
    let mut r = RoutingTable::direct(w);
    for _ in 0..squaring_count(n) {
        let (c, q) = minplus_product(&d, &d);
        for u in 0..n {
            let product = (0..n).map(|v| (c.get(u, v), q.get(u, v)));
            absorb_row(&mut d.cells[u * n..(u + 1) * n], &mut r.cells[u * n..(u + 1) * n], product);
        }
    }
    (d, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ApspMsg {
    Entry { side: Side, row: NodeId, col: NodeId, value: Cost },
    Partial { row: NodeId, col: NodeId, value: Cost, witness: Option<NodeId> },
}

impl Payload for ApspMsg {
    fn tag(&self) -> Tag {
        match self {
            ApspMsg::Entry { .. } => Tag::BlockFragment,
            ApspMsg::Partial { .. } => Tag::PartialProduct,
        }
    }

    fn slots(&self) -> usize {
        4
    }
}

/// The cube layout of the work partition for `n` real nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeLayout {
    /// Side of the cube of blocks.
    pub side: usize,
    /// `side³ ≥ n`, the number of simulated processors.
    pub padded_n: usize,
}

impl CubeLayout {
    pub fn for_nodes(n: usize) -> Self {
        let mut side = 1;
        while side * side * side < n {
            side += 1;
        }
        CubeLayout { side, padded_n: side * side * side }
    }

    fn block(&self) -> usize {
        self.side * self.side
    }

    fn group(&self, x: NodeId) -> usize {
        x / self.block()
    }

    /// Processor owning block `(row group, inner group, column group)`.
    pub fn owner(&self, i: usize, j: usize, k: usize) -> NodeId {
        i * self.side * self.side + j * self.side + k
    }

    fn coords(&self, p: NodeId) -> (usize, usize, usize) {
        (p / self.block(), (p / self.side) % self.side, p % self.side)
    }

    fn members(&self, g: usize) -> core::ops::Range<usize> {
        g * self.block()..(g + 1) * self.block()
    }
}

#[derive(Clone, Debug)]
pub struct DistributedApsp {
    pub distances: DistanceMatrix,
    pub routes: RoutingTable,
    pub layout: CubeLayout,
    pub squarings: usize,
}

/// Distributed APSP. Node `u` owns row `u` of the distance matrix and of the
/// routing table. The matrix is padded to a cube of size `side³` whose extra
/// rows are isolated; those rows are owned by extra simulated processors.
pub fn distributed_apsp(g: &WeightedGraph, session: &mut Session, label: &str) -> Result<DistributedApsp, EngineError> {
    let n = g.node_count();
    let layout = CubeLayout::for_nodes(n);
    let np = layout.padded_n;

    let mut rows: Vec<Vec<Cost>> = (0..np)
        .map(|u| (0..np).map(|v| if u < n && v < n { g.link_weight(u, v) } else if u == v { Cost::ZERO } else { Cost::INFINITY }).collect())
        .collect();
    let mut routes: Vec<Vec<Option<NodeId>>> = (0..np)
        .map(|u| (0..np).map(|v| (u != v && rows[u][v].is_finite()).then_some(v)).collect())
        .collect();

    let squarings = squaring_count(np);
    if squarings > 0 {
        let spread = distribution_schedule(&layout)?;
        let gather = gather_schedule(&layout)?;
        for _ in 0..squarings {
            square_once(&layout, &mut rows, &mut routes, session, label, &spread, &gather)?;
        }
    }

    rows.truncate(n);
    routes.truncate(n);
    for (r, routing) in rows.iter_mut().zip(routes.iter_mut()) {
        r.truncate(n);
        routing.truncate(n);
    }
    Ok(DistributedApsp {
        distances: DistanceMatrix::from_rows(rows),
        routes: RoutingTable::from_rows(routes),
        layout,
        squarings,
    })
}

/// Row `u`'s payloads, in order: the left copies of every entry to each
/// column group, then the right copies of every entry to each row group.
fn spread_targets(layout: &CubeLayout, u: NodeId) -> Vec<NodeId> {
    let q = layout.side;
    let np = layout.padded_n;
    let mut out = Vec::with_capacity(2 * q * np);
    for w in 0..np {
        for k in 0..q {
            out.push(layout.owner(layout.group(u), layout.group(w), k));
        }
    }
    for v in 0..np {
        for i in 0..q {
            out.push(layout.owner(i, layout.group(u), layout.group(v)));
        }
    }
    out
}

fn distribution_schedule(layout: &CubeLayout) -> Result<Schedule, EngineError> {
    let np = layout.padded_n;
    let dests: Vec<Vec<NodeId>> = (0..np).map(|u| spread_targets(layout, u)).collect();
    let bound = 2 * layout.side * layout.block() * layout.block() / layout.side;
    Ok(route_balanced(np, &dests, bound)?)
}

/// A block processor's partial results, in order: for each row of its row
/// group, each column of its column group.
fn gather_targets(layout: &CubeLayout, p: NodeId) -> Vec<NodeId> {
    let (i, _, k) = layout.coords(p);
    let mut out = Vec::with_capacity(layout.block() * layout.block());
    for u in layout.members(i) {
        for _ in layout.members(k) {
            out.push(u);
        }
    }
    out
}

fn gather_schedule(layout: &CubeLayout) -> Result<Schedule, EngineError> {
    let np = layout.padded_n;
    let dests: Vec<Vec<NodeId>> = (0..np).map(|p| gather_targets(layout, p)).collect();
    Ok(route_balanced(np, &dests, layout.block() * layout.block())?)
}

fn square_once(
    layout: &CubeLayout,
    rows: &mut [Vec<Cost>],
    routes: &mut [Vec<Option<NodeId>>],
    session: &mut Session,
    label: &str,
    spread: &Schedule,
    gather: &Schedule,
) -> Result<(), EngineError> {
    let np = layout.padded_n;
    let q = layout.side;
    let b = layout.block();

    let loads: Vec<Vec<(NodeId, ApspMsg)>> = (0..np)
        .map(|u| {
            let targets = spread_targets(layout, u);
            let mut load = Vec::with_capacity(targets.len());
            let mut t = targets.into_iter();
            for w in 0..np {
                for _ in 0..q {
                    let entry = ApspMsg::Entry { side: Side::Left, row: u, col: w, value: rows[u][w] };
                    load.push((t.next().unwrap(), entry));
                }
            }
            for v in 0..np {
                for _ in 0..q {
                    let entry = ApspMsg::Entry { side: Side::Right, row: u, col: v, value: rows[u][v] };
                    load.push((t.next().unwrap(), entry));
                }
            }
            load
        })
        .collect();
    let received = exchange(session, label, loads, spread)?;

    // Each block processor multiplies its two sub-matrices.
    let partial_loads: Vec<Vec<(NodeId, ApspMsg)>> = received
        .into_iter()
        .enumerate()
        .map(|(p, inbox)| {
            let (i, j, k) = layout.coords(p);
            let (row0, inner0, col0) = (i * b, j * b, k * b);
            let mut left = alloc::vec![Cost::INFINITY; b * b];
            let mut right = alloc::vec![Cost::INFINITY; b * b];
            for (_, msg) in inbox {
                if let ApspMsg::Entry { side, row, col, value } = msg {
                    match side {
                        Side::Left => left[(row - row0) * b + (col - inner0)] = value,
                        Side::Right => right[(row - inner0) * b + (col - col0)] = value,
                    }
                }
            }
            let mut load = Vec::with_capacity(b * b);
            for r in 0..b {
                for c in 0..b {
                    let mut best = (Cost::INFINITY, None);
                    for w in 0..b {
                        let sum = left[r * b + w] + right[w * b + c];
                        if sum < best.0 {
                            best = (sum, Some(inner0 + w));
                        }
                    }
                    let msg = ApspMsg::Partial { row: row0 + r, col: col0 + c, value: best.0, witness: best.1 };
                    load.push((row0 + r, msg));
                }
            }
            load
        })
        .collect();
    let partials = exchange(session, label, partial_loads, gather)?;

    // Row owners take entrywise minima, tie-broken by the witness id.
    for (u, inbox) in partials.into_iter().enumerate() {
        let mut product: Vec<(Cost, Option<NodeId>)> = alloc::vec![(Cost::INFINITY, None); np];
        for (_, msg) in inbox {
            if let ApspMsg::Partial { row, col, value, witness } = msg {
                debug_assert_eq!(row, u);
                let cur = &mut product[col];
                if value.is_finite() && (value, witness) < (cur.0, cur.1.or(Some(usize::MAX))) {
                    *cur = (value, witness);
                }
            }
        }
        absorb_row(&mut rows[u], &mut routes[u], product.into_iter());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use crate::generate::{generate_graph, GeneratorParams, GraphKind};
    use proptest::prelude::*;

    fn c(x: u64) -> Cost {
        Cost::from_units(x)
    }

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, c(1)), (1, 2, c(2)), (0, 2, c(4))], [0]).unwrap()
    }

    /// Relaxation over all `(u, w, v)` triples until nothing changes.
    fn closure(w: &DistanceMatrix) -> DistanceMatrix {
        let n = w.n();
        let mut d = w.clone();
        loop {
            let mut changed = false;
            for u in 0..n {
                for k in 0..n {
                    for v in 0..n {
                        let via = d.get(u, k) + d.get(k, v);
                        if via < d.get(u, v) {
                            d.set(u, v, via);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }

    fn route_length(g: &WeightedGraph, r: &RoutingTable, u: NodeId, v: NodeId) -> Option<Cost> {
        let path = r.walk(g, u, v)?;
        Some(path.windows(2).map(|p| g.weight(p[0], p[1]).unwrap()).sum())
    }

    #[test]
    fn identity_is_neutral() {
        let a = DistanceMatrix::weights_of(&triangle());
        let (p, _) = minplus_product(&a, &DistanceMatrix::identity(3));
        assert_eq!(p, a);
    }

    #[test]
    fn triangle_product() {
        let a = DistanceMatrix::weights_of(&triangle());
        let (p, q) = minplus_product(&a, &a);
        assert_eq!(p.get(0, 2), c(3));
        assert_eq!(q.get(0, 2), Some(1));
    }

    #[test]
    fn converged_matrix_is_fixpoint() {
        let (d, _) = iterated_squaring(&DistanceMatrix::weights_of(&triangle()));
        assert_eq!(minplus_product(&d, &d).0, d);
    }

    #[test]
    fn unit_path() {
        let g = WeightedGraph::new(3, [(0, 1, c(1)), (1, 2, c(1))], [0]).unwrap();
        let (d, r) = iterated_squaring(&DistanceMatrix::weights_of(&g));
        assert_eq!(d.get(0, 2), c(2));
        assert_eq!(r.next_hop(0, 2), Some(1));
    }

    #[test]
    fn single_node() {
        let g = WeightedGraph::new(1, [], [0]).unwrap();
        let (d, r) = iterated_squaring(&DistanceMatrix::weights_of(&g));
        assert_eq!(d.get(0, 0), Cost::ZERO);
        assert_eq!(r.next_hop(0, 0), None);
        let mut s = Session::new(EngineConfig::default());
        let out = distributed_apsp(&g, &mut s, "apsp").unwrap();
        assert_eq!(out.distances, d);
        assert_eq!(s.metrics().rounds(), 0);
    }

    #[test]
    fn squaring_counts() {
        assert_eq!(squaring_count(1), 0);
        assert_eq!(squaring_count(2), 1);
        assert_eq!(squaring_count(8), 3);
        assert_eq!(squaring_count(9), 4);
        assert_eq!(squaring_count(27), 5);
    }

    #[test]
    fn cube_padding() {
        assert_eq!(CubeLayout::for_nodes(5).padded_n, 8);
        assert_eq!(CubeLayout::for_nodes(8).padded_n, 8);
        assert_eq!(CubeLayout::for_nodes(10).padded_n, 27);
        assert_eq!(CubeLayout::for_nodes(20).padded_n, 27);
        assert_eq!(CubeLayout::for_nodes(64).side, 4);
    }

    #[test]
    fn complete_unit_graph_settles_after_one_squaring() {
        let g = generate_graph(GraphKind::Complete, &GeneratorParams::unit(8, 2), 1).unwrap();
        let w = DistanceMatrix::weights_of(&g);
        let (once, _) = minplus_product(&w, &w);
        assert_eq!(once, w);
        let mut s = Session::new(EngineConfig::default());
        let out = distributed_apsp(&g, &mut s, "apsp").unwrap();
        assert_eq!(out.distances, w);
    }

    #[test]
    fn distributed_matches_local() {
        for (n, seed) in [(5, 3), (8, 1), (10, 7), (20, 2), (27, 11)] {
            let g = generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, 2, 0.3, 1, 20), seed).unwrap();
            let w = DistanceMatrix::weights_of(&g);
            let (d, r) = iterated_squaring(&w);
            assert_eq!(d, closure(&w));
            let mut s = Session::new(EngineConfig::default());
            let out = distributed_apsp(&g, &mut s, "apsp").unwrap();
            assert_eq!(out.distances, d, "n={n}");
            assert_eq!(out.routes, r, "n={n}");
            let q = out.layout.side;
            assert!(s.metrics().rounds() <= 8 * q * out.squarings, "rounds {}", s.metrics().rounds());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn squaring_invariants(n in 1usize..10, seed in any::<u64>(), density in 0.0f64..0.8) {
            let g = generate_graph(GraphKind::RandomConnected, &GeneratorParams::random(n, 1, density, 1, 20), seed).unwrap();
            let w = DistanceMatrix::weights_of(&g);
            let mut d = w.clone();
            for _ in 0..squaring_count(n) {
                let (next, q) = minplus_product(&d, &d);
                for u in 0..n {
                    for v in 0..n {
                        prop_assert!(next.get(u, v) <= d.get(u, v));
                        prop_assert_eq!(next.get(u, v), next.get(v, u));
                        if let Some(x) = q.get(u, v) {
                            prop_assert_eq!(d.get(u, x) + d.get(x, v), next.get(u, v));
                        }
                    }
                }
                d = next;
            }
            let (best, routes) = iterated_squaring(&w);
            prop_assert_eq!(&best, &d);
            prop_assert_eq!(&best, &closure(&w));
            for u in 0..n {
                for v in 0..n {
                    prop_assert_eq!(route_length(&g, &routes, u, v), Some(best.get(u, v)));
                }
            }
        }
    }
}
