//! Event queue primitives. Events execute in (at, seq) order; the sequence
//! number is assigned at scheduling time in deterministic processing order,
//! so a run is a pure function of its configuration and seed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::aura::AuraVote;
use crate::chain::{Block, BlockId, Millis, NodeId, Transaction};

/// Timer purposes; each carries the epoch that must still be current for
/// the fire to count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimerKind {
    /// Aura step boundary for the step starting at the fire instant.
    AuraStep { epoch: u64 },
    /// Delayed proposal send (Clique family and VRF).
    ProposalFire { epoch: u64 },
    /// Re-plan after one silent period following recovery.
    RecoveryReplan { epoch: u64 },
}

#[derive(Debug, Clone)]
pub enum EventKind {
    /// Workload hands a fresh user transaction to this node.
    InjectTx { seq: u64, gas_price: u64 },
    DeliverTx(Arc<Transaction>),
    DeliverBlock { block: Arc<Block>, synced: bool },
    DeliverVote(AuraVote),
    /// Peer asks this node for a block it is missing.
    RequestBlock { id: BlockId, requester: NodeId },
    TimerFire(TimerKind),
    NodeCrash,
    NodeRecover,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::InjectTx { .. } => "inject-tx",
            EventKind::DeliverTx(_) => "deliver-tx",
            EventKind::DeliverBlock { synced: false, .. } => "deliver-block",
            EventKind::DeliverBlock { synced: true, .. } => "deliver-block-sync",
            EventKind::DeliverVote(_) => "deliver-vote",
            EventKind::RequestBlock { .. } => "request-block",
            EventKind::TimerFire(_) => "timer-fire",
            EventKind::NodeCrash => "node-crash",
            EventKind::NodeRecover => "node-recover",
        }
    }

    /// Stable payload digest for the event log.
    pub fn digest(&self) -> u64 {
        match self {
            EventKind::InjectTx { seq, .. } => *seq,
            EventKind::DeliverTx(tx) => tx.id.0,
            EventKind::DeliverBlock { block, .. } => block.id.0,
            EventKind::DeliverVote(v) => v.block.0 ^ ((v.voter.0 as u64) << 56),
            EventKind::RequestBlock { id, .. } => id.0,
            EventKind::TimerFire(_) => 0,
            EventKind::NodeCrash | EventKind::NodeRecover => 0,
        }
    }
}

#[derive(Debug)]
pub struct SimEvent {
    pub at: Millis,
    pub seq: u64,
    pub node: NodeId,
    pub kind: EventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for SimEvent {}
impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for (at, seq) min-ordering.
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Min-queue over (at, seq) with deterministic sequence assignment.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, at: Millis, node: NodeId, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent {
            at,
            seq,
            node,
            kind,
        });
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// One executed event, exportable as `time,seq,kind,node,payload-digest`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub time: Millis,
    pub seq: u64,
    pub kind: &'static str,
    pub node: u32,
    pub digest: u64,
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{:016x}",
            self.time, self.seq, self.kind, self.node, self.digest
        )
    }
}
