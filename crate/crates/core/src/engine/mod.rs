//! Lock-step execution of node programs over a complete communication graph.
//!
//! Round `r` works as follows: every running node receives the envelopes sent
//! to it in round `r - 1`, computes, and emits at most one envelope per
//! destination. The first dispatch is round 1. A run ends when every node has
//! halted or when a round passes in which nothing at all was sent; the
//! reported round count is the last round in which something was sent.

mod route;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::NodeId;

pub use route::{exchange, route_balanced, ItemId, RouteError, Schedule, Transfer};

/// Message kinds, recorded in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Wakeup,
    Update,
    SetCategory,
    BlockFragment,
    PartialProduct,
    MstCandidate,
    MstEdgeAnnounce,
    ParentAnnounce,
    PruneRequest,
    Other,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Wakeup => "wakeup",
            Tag::Update => "update",
            Tag::SetCategory => "set_category",
            Tag::BlockFragment => "block_fragment",
            Tag::PartialProduct => "partial_product",
            Tag::MstCandidate => "mst_candidate",
            Tag::MstEdgeAnnounce => "mst_edge_announce",
            Tag::ParentAnnounce => "parent_announce",
            Tag::PruneRequest => "prune_request",
            Tag::Other => "other",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A message body. `slots` counts its scalar fields (ids, weights, flags);
/// the engine rejects bodies with more slots than the configured capacity.
pub trait Payload: Clone {
    fn tag(&self) -> Tag;
    fn slots(&self) -> usize;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope<M> {
    pub src: NodeId,
    pub dst: NodeId,
    pub round: usize,
    pub payload: M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfDelivery {
    Include,
    Exclude,
}

/// One destination per other node (and optionally the sender itself).
pub fn broadcast<M: Clone>(n: usize, src: NodeId, payload: &M, mode: SelfDelivery) -> Vec<(NodeId, M)> {
    (0..n)
        .filter(|&d| d != src || mode == SelfDelivery::Include)
        .map(|d| (d, payload.clone()))
        .collect()
}

/// What a node sees and emits during one round.
pub struct Context<'a, M> {
    node: NodeId,
    n: usize,
    round: usize,
    inbox: &'a [Envelope<M>],
    outbox: Vec<(NodeId, M)>,
}

impl<'a, M: Clone> Context<'a, M> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based round number.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Envelopes sent to this node last round, in sender order.
    pub fn inbox(&self) -> &'a [Envelope<M>] {
        self.inbox
    }

    pub fn send(&mut self, dst: NodeId, payload: M) {
        self.outbox.push((dst, payload));
    }

    pub fn broadcast(&mut self, payload: M, mode: SelfDelivery) {
        let list = broadcast(self.n, self.node, &payload, mode);
        self.outbox.extend(list);
    }
}

pub trait NodeProgram {
    type Msg: Payload;

    fn step(&mut self, ctx: &mut Context<'_, Self::Msg>) -> Status;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_rounds: usize,
    /// Maximum scalar fields per payload.
    pub slot_capacity: usize,
    pub trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_rounds: 1_000_000,
            slot_capacity: 4,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TraceRecord {
    pub round: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub tag: Tag,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.round, self.src, self.dst, self.tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("clique needs at least one node")]
    NoNodes,
    #[error("node {node} sent two messages to {dst} in round {round}")]
    BandwidthViolation { node: NodeId, dst: NodeId, round: usize },
    #[error("node {node} addressed nonexistent node {dst} in round {round}")]
    UnknownDestination { node: NodeId, dst: NodeId, round: usize },
    #[error("node {node} sent a {slots}-slot payload in round {round} (capacity {capacity})")]
    PayloadTooLarge { node: NodeId, round: usize, slots: usize, capacity: usize },
    #[error("no termination within {max_rounds} rounds")]
    NonTermination { max_rounds: usize },
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// Final program states and exact counts of one run.
#[derive(Debug)]
pub struct Execution<P> {
    pub programs: Vec<P>,
    pub rounds: usize,
    pub messages: usize,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Copy, Debug)]
pub struct Clique {
    n: usize,
    config: EngineConfig,
}

impl Clique {
    pub fn new(n: usize, config: EngineConfig) -> Self {
        Clique { n, config }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn run<P: NodeProgram>(&self, mut programs: Vec<P>) -> Result<Execution<P>, EngineError> {
        let n = self.n;
        if n == 0 {
            return Err(EngineError::NoNodes);
        }
        assert_eq!(programs.len(), n, "one program per node");

        let mut inboxes: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
        let mut halted = alloc::vec![false; n];
        let mut seen = alloc::vec![usize::MAX; n];
        let mut trace = Vec::new();
        let mut messages = 0;
        let mut last_active = 0;
        let mut round = 0;

        loop {
            round += 1;
            if round > self.config.max_rounds {
                return Err(EngineError::NonTermination { max_rounds: self.config.max_rounds });
            }
            let mut next: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
            let mut sent = 0;
            for node in 0..n {
                let inbox = core::mem::take(&mut inboxes[node]);
                if halted[node] {
                    continue;
                }
                let mut ctx = Context {
                    node,
                    n,
                    round,
                    inbox: &inbox,
                    outbox: Vec::new(),
                };
                let status = programs[node].step(&mut ctx);
                for (dst, payload) in ctx.outbox {
                    if dst >= n {
                        return Err(EngineError::UnknownDestination { node, dst, round });
                    }
                    // `seen[dst] == node` means `node` already used link `node -> dst`
                    // this round; senders are visited one at a time so a single
                    // marker per destination suffices.
                    if seen[dst] == node {
                        return Err(EngineError::BandwidthViolation { node, dst, round });
                    }
                    seen[dst] = node;
                    let slots = payload.slots();
                    if slots > self.config.slot_capacity {
                        return Err(EngineError::PayloadTooLarge {
                            node,
                            round,
                            slots,
                            capacity: self.config.slot_capacity,
                        });
                    }
                    if self.config.trace {
                        trace.push(TraceRecord { round, src: node, dst, tag: payload.tag() });
                    }
                    next[dst].push(Envelope { src: node, dst, round, payload });
                    sent += 1;
                }
                if status == Status::Halted {
                    halted[node] = true;
                }
            }
            // reset link markers for the next round
            for s in seen.iter_mut() {
                *s = usize::MAX;
            }
            messages += sent;
            if sent > 0 {
                last_active = round;
            }
            inboxes = next;
            if sent == 0 || halted.iter().all(|&h| h) {
                break;
            }
        }

        Ok(Execution {
            programs,
            rounds: last_active,
            messages,
            trace,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMetrics {
    pub label: String,
    pub rounds: usize,
    pub messages: usize,
}

/// Round and message totals with a per-step breakdown. Totals are always
/// derived from the breakdown.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundMetrics {
    phases: Vec<PhaseMetrics>,
}

impl RoundMetrics {
    pub fn new() -> Self {
        RoundMetrics::default()
    }

    /// Adds to the phase called `label`, creating it at the end if new.
    pub fn record(&mut self, label: &str, rounds: usize, messages: usize) {
        match self.phases.iter_mut().find(|p| p.label == label) {
            Some(p) => {
                p.rounds += rounds;
                p.messages += messages;
            }
            None => self.phases.push(PhaseMetrics {
                label: label.into(),
                rounds,
                messages,
            }),
        }
    }

    pub fn absorb(&mut self, other: &RoundMetrics) {
        for p in &other.phases {
            self.record(&p.label, p.rounds, p.messages);
        }
    }

    pub fn rounds(&self) -> usize {
        self.phases.iter().map(|p| p.rounds).sum()
    }

    pub fn messages(&self) -> usize {
        self.phases.iter().map(|p| p.messages).sum()
    }

    pub fn phases(&self) -> &[PhaseMetrics] {
        &self.phases
    }

    pub fn phase(&self, label: &str) -> Option<&PhaseMetrics> {
        self.phases.iter().find(|p| p.label == label)
    }
}

/// Runs a sequence of engine executions back to back, as separate steps
/// separated by barriers, and keeps their metrics and a global trace.
#[derive(Debug, Clone)]
pub struct Session {
    config: EngineConfig,
    metrics: RoundMetrics,
    trace: Vec<TraceRecord>,
}

impl Session {
    pub fn new(config: EngineConfig) -> Self {
        Session {
            config,
            metrics: RoundMetrics::new(),
            trace: Vec::new(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn run<P: NodeProgram>(&mut self, label: &str, programs: Vec<P>) -> Result<Vec<P>, EngineError> {
        self.run_bounded(label, programs, self.config.max_rounds)
    }

    /// Like [`Session::run`] with a tighter round limit for this step.
    pub fn run_bounded<P: NodeProgram>(
        &mut self,
        label: &str,
        programs: Vec<P>,
        max_rounds: usize,
    ) -> Result<Vec<P>, EngineError> {
        let offset = self.metrics.rounds();
        let config = EngineConfig {
            max_rounds: max_rounds.min(self.config.max_rounds),
            ..self.config
        };
        let clique = Clique::new(programs.len(), config);
        let exec = clique.run(programs)?;
        self.trace.extend(exec.trace.into_iter().map(|mut r| {
            r.round += offset;
            r
        }));
        self.metrics.record(label, exec.rounds, exec.messages);
        Ok(exec.programs)
    }

    pub fn metrics(&self) -> &RoundMetrics {
        &self.metrics
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_parts(self) -> (RoundMetrics, Vec<TraceRecord>) {
        (self.metrics, self.trace)
    }
}
