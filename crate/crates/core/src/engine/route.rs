//! Deterministic balanced routing: each payload travels at most two hops,
//! source to relay to destination.
//!
//! The demand is a bipartite multigraph (senders on one side, receivers on
//! the other) of maximum degree `Δ`. It is properly edge-coloured with `Δ`
//! colours by alternating-path recolouring. A payload of colour `c` is relayed
//! by node `c mod n` within batch `c / n`, and each batch takes two rounds.
//! Within a batch every sender uses each colour once and every receiver sees
//! each colour once, so no link carries two payloads in the same round. The
//! schedule needs at most `2⌈Δ/n⌉` rounds.

use alloc::vec::Vec;

use thiserror::Error;

use super::{Context, EngineError, NodeProgram, Payload, Session, Status};
use crate::graph::NodeId;

const FREE: usize = usize::MAX;

/// Payload `index` of node `origin`'s load.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId {
    pub origin: NodeId,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub src: NodeId,
    pub dst: NodeId,
    pub item: ItemId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("node {node} sends {count} payloads, bound is {bound}")]
    SendOverload { node: NodeId, count: usize, bound: usize },
    #[error("node {node} receives {count} payloads, bound is {bound}")]
    ReceiveOverload { node: NodeId, count: usize, bound: usize },
    #[error("payload addressed to nonexistent node {dst}")]
    UnknownDestination { dst: NodeId },
}

#[derive(Clone, Debug)]
pub struct Schedule {
    n: usize,
    rounds: Vec<Vec<Transfer>>,
    /// Payloads whose source is their destination; never sent.
    local: Vec<ItemId>,
    destinations: Vec<Vec<NodeId>>,
    outgoing: Vec<Vec<Vec<(NodeId, ItemId)>>>,
    incoming: Vec<Vec<Vec<(NodeId, ItemId)>>>,
}

impl Schedule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Vec<Transfer>] {
        &self.rounds
    }

    pub fn message_count(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    pub fn local_items(&self) -> &[ItemId] {
        &self.local
    }

    pub fn destination(&self, item: ItemId) -> NodeId {
        self.destinations[item.origin][item.index]
    }

    pub fn payload_count(&self) -> usize {
        self.destinations.iter().map(Vec::len).sum()
    }
}

/// Builds a two-hop schedule for the given demand: `destinations[u]` lists the
/// destination of each payload of node `u`, in payload order. Every node may
/// send at most `bound` and receive at most `bound` payloads.
pub fn route_balanced(n: usize, destinations: &[Vec<NodeId>], bound: usize) -> Result<Schedule, RouteError> {
    assert_eq!(destinations.len(), n);
    let mut received = alloc::vec![0usize; n];
    for (u, list) in destinations.iter().enumerate() {
        if list.len() > bound {
            return Err(RouteError::SendOverload { node: u, count: list.len(), bound });
        }
        for &d in list {
            if d >= n {
                return Err(RouteError::UnknownDestination { dst: d });
            }
            received[d] += 1;
        }
    }
    if let Some((node, &count)) = received.iter().enumerate().find(|(_, &c)| c > bound) {
        return Err(RouteError::ReceiveOverload { node, count, bound });
    }

    let mut local = Vec::new();
    let mut items = Vec::new();
    for (u, list) in destinations.iter().enumerate() {
        for (index, &d) in list.iter().enumerate() {
            let item = ItemId { origin: u, index };
            if d == u {
                local.push(item);
            } else {
                items.push((u, d, item));
            }
        }
    }

    let colours = colour_demand(n, &items);
    let batches = colours.iter().map(|&c| c / n + 1).max().unwrap_or(0);
    let mut rounds: Vec<Vec<Transfer>> = (0..2 * batches).map(|_| Vec::new()).collect();
    for (&(src, dst, item), &c) in items.iter().zip(&colours) {
        let relay = c % n;
        let batch = c / n;
        if relay == dst {
            rounds[2 * batch].push(Transfer { src, dst, item });
        } else if relay == src {
            rounds[2 * batch + 1].push(Transfer { src, dst, item });
        } else {
            rounds[2 * batch].push(Transfer { src, dst: relay, item });
            rounds[2 * batch + 1].push(Transfer { src: relay, dst, item });
        }
    }
    rounds.retain(|r| !r.is_empty());

    let mut outgoing = alloc::vec![alloc::vec![Vec::new(); n]; rounds.len()];
    let mut incoming = alloc::vec![alloc::vec![Vec::new(); n]; rounds.len()];
    for (r, transfers) in rounds.iter().enumerate() {
        for t in transfers {
            outgoing[r][t.src].push((t.dst, t.item));
            incoming[r][t.dst].push((t.src, t.item));
        }
        for list in incoming[r].iter_mut() {
            list.sort_unstable();
        }
    }

    Ok(Schedule {
        n,
        rounds,
        local,
        destinations: destinations.to_vec(),
        outgoing,
        incoming,
    })
}

/// Proper edge colouring of the bipartite demand multigraph with
/// `max degree` colours.
fn colour_demand(n: usize, items: &[(NodeId, NodeId, ItemId)]) -> Vec<usize> {
    let mut send_deg = alloc::vec![0usize; n];
    let mut recv_deg = alloc::vec![0usize; n];
    for &(u, d, _) in items {
        send_deg[u] += 1;
        recv_deg[d] += 1;
    }
    let delta = send_deg.iter().chain(&recv_deg).copied().max().unwrap_or(0);

    // at[side][node][colour] = edge index holding that colour, or FREE
    let mut at_src = alloc::vec![alloc::vec![FREE; delta]; n];
    let mut at_dst = alloc::vec![alloc::vec![FREE; delta]; n];
    let mut colour = alloc::vec![FREE; items.len()];

    for (e, &(u, d, _)) in items.iter().enumerate() {
        // Colours whose relay is an endpoint save a hop.
        let a = [d, u]
            .into_iter()
            .find(|&c| c < delta && at_src[u][c] == FREE)
            .unwrap_or_else(|| first_free(&at_src[u]));
        let b = first_free(&at_dst[d]);
        if at_dst[d][a] != FREE {
            // Walk the a/b alternating path that starts at receiver d and swap
            // its colours; it can reach neither u nor d again.
            let mut path = Vec::new();
            let mut on_dst_side = true;
            let mut node = d;
            let mut want = a;
            loop {
                let next = if on_dst_side { at_dst[node][want] } else { at_src[node][want] };
                if next == FREE {
                    break;
                }
                path.push(next);
                let (pu, pd, _) = items[next];
                node = if on_dst_side { pu } else { pd };
                on_dst_side = !on_dst_side;
                want = if want == a { b } else { a };
            }
            for &p in &path {
                let (pu, pd, _) = items[p];
                at_src[pu][colour[p]] = FREE;
                at_dst[pd][colour[p]] = FREE;
            }
            for &p in &path {
                let (pu, pd, _) = items[p];
                colour[p] = if colour[p] == a { b } else { a };
                at_src[pu][colour[p]] = p;
                at_dst[pd][colour[p]] = p;
            }
        }
        debug_assert_eq!(at_src[u][a], FREE);
        debug_assert_eq!(at_dst[d][a], FREE);
        colour[e] = a;
        at_src[u][a] = e;
        at_dst[d][a] = e;
    }
    colour
}

fn first_free(slots: &[usize]) -> usize {
    slots.iter().position(|&s| s == FREE).expect("colour available below max degree")
}

struct RelayNode<'s, M> {
    me: NodeId,
    schedule: &'s Schedule,
    held: alloc::collections::BTreeMap<ItemId, M>,
    delivered: Vec<(ItemId, M)>,
}

impl<M: Payload> NodeProgram for RelayNode<'_, M> {
    type Msg = M;

    fn step(&mut self, ctx: &mut Context<'_, M>) -> Status {
        let r = ctx.round();
        if r >= 2 {
            let expected = &self.schedule.incoming[r - 2][self.me];
            debug_assert_eq!(expected.len(), ctx.inbox().len());
            for (env, &(src, item)) in ctx.inbox().iter().zip(expected) {
                debug_assert_eq!(env.src, src);
                if self.schedule.destination(item) == self.me {
                    self.delivered.push((item, env.payload.clone()));
                } else {
                    self.held.insert(item, env.payload.clone());
                }
            }
        }
        if let Some(round) = self.schedule.outgoing.get(r - 1) {
            for &(dst, item) in &round[self.me] {
                let payload = self.held.remove(&item).expect("scheduled payload is held");
                ctx.send(dst, payload);
            }
        }
        Status::Running
    }
}

/// Delivers `loads[u][i]` (a destination and a payload) according to
/// `schedule`, which must have been built from the same destinations. Returns,
/// per node, the received `(origin, payload)` pairs in `(origin, index)` order.
pub fn exchange<M: Payload>(
    session: &mut Session,
    label: &str,
    loads: Vec<Vec<(NodeId, M)>>,
    schedule: &Schedule,
) -> Result<Vec<Vec<(NodeId, M)>>, EngineError> {
    let n = schedule.n;
    assert_eq!(loads.len(), n);
    let mut programs: Vec<RelayNode<'_, M>> = (0..n)
        .map(|me| RelayNode {
            me,
            schedule,
            held: alloc::collections::BTreeMap::new(),
            delivered: Vec::new(),
        })
        .collect();
    for (u, load) in loads.into_iter().enumerate() {
        assert_eq!(load.len(), schedule.destinations[u].len(), "load matches schedule");
        for (index, (dst, payload)) in load.into_iter().enumerate() {
            debug_assert_eq!(dst, schedule.destinations[u][index]);
            let item = ItemId { origin: u, index };
            if dst == u {
                programs[u].delivered.push((item, payload));
            } else {
                programs[u].held.insert(item, payload);
            }
        }
    }
    let programs = session.run(label, programs)?;
    Ok(programs
        .into_iter()
        .map(|mut p| {
            debug_assert!(p.held.is_empty());
            p.delivered.sort_by_key(|(item, _)| *item);
            p.delivered.into_iter().map(|(item, m)| (item.origin, m)).collect()
        })
        .collect())
}
