//! The deterministic event loop: one global simulated clock, per-node
//! consensus state machines, vote gathering, crash windows, catch-up sync
//! and the transaction workload. Single-threaded per run; a run is a pure
//! function of (setup, seed).

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::adversary::{
    attack_order_displacement, attack_order_insertion, zero_delay_send_at, AttackConfig,
    AttackerTxFactory, Type1Mode,
};
use crate::aura::{aura_accept, aura_leader, aura_step, aura_verify, AuraConfig, AuraVote};
use crate::chain::{
    build_block, genesis_block, AccountId, Block, BlockId, ChainStore, InsertOutcome, Mempool,
    Millis, NodeId, SealExtra, Transaction, TxId, TxKind,
};
use crate::clique::{
    clique_in_turn, clique_verify, sign_recently, wiggle_delay, CliqueConfig, RecentSigners,
};
use crate::remedies::{
    clique_verify_patched, expected_edge_turn, hpb_fallback_sealer, hpb_in_turn_sealer,
    hpb_verify, vrf_hash, vrf_is_candidate, vrf_prove, vrf_seed, vrf_verify, HardwareOracle,
    KeyRegistry,
};

use super::event::{EventKind, EventQueue, LogRecord, SimEvent, TimerKind};
use super::faults::FaultSchedule;
use super::net::{NetParams, NetworkModel};
use super::rng::{derive_stream, derive_u64};
use super::workload::Workload;

/// Which consensus engine the committee runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConsensusKind {
    Aura,
    Clique,
    CliquePatched,
    Hpb,
    Vrf,
}

impl ConsensusKind {
    pub fn label(self) -> &'static str {
        match self {
            ConsensusKind::Aura => "aura",
            ConsensusKind::Clique => "clique",
            ConsensusKind::CliquePatched => "clique-patched",
            ConsensusKind::Hpb => "hpb",
            ConsensusKind::Vrf => "vrf",
        }
    }
}

const VRF_MAX_RETRIES: u32 = 24;

/// Mining mute: the selected in-turn sealer of a covered height skips its
/// own proposal for that height (its process otherwise keeps running). This
/// is the "sleep the legal in-turn sealer" experimental protocol; it follows
/// the chain height, so it stays aligned even if the chain drifts off the
/// nominal time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MutePlan {
    #[default]
    None,
    /// Mute the in-turn sealer of every `cadence`-th height, optionally
    /// exempting one node (the attacker keeps its own turns in the hybrid).
    Leaders {
        cadence: u64,
        exempt: Option<NodeId>,
    },
}

impl MutePlan {
    pub fn covers(&self, height: u64) -> bool {
        match self {
            MutePlan::None => false,
            MutePlan::Leaders { cadence, .. } => height.is_multiple_of((*cadence).max(1)),
        }
    }
}

/// Everything a run needs. `seed` drives every random stream.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub consensus: ConsensusKind,
    pub committee: usize,
    pub period: Millis,
    pub seed: u64,
    pub until: Millis,
    pub net: NetParams,
    pub workload: Workload,
    pub faults: FaultSchedule,
    pub mute: MutePlan,
    pub attack: AttackConfig,
    pub aura_votes: bool,
    pub vrf_threshold: f64,
    pub wiggle_unit: Millis,
    pub block_gas_limit: u64,
    pub mempool_cap: usize,
    pub record_log: bool,
}

impl SimSetup {
    pub fn new(consensus: ConsensusKind, committee: usize, seed: u64) -> Self {
        SimSetup {
            consensus,
            committee,
            period: 3000,
            seed,
            until: 40 * 60 * 1000,
            net: NetParams::default(),
            workload: Workload::default(),
            faults: FaultSchedule::none(),
            mute: MutePlan::None,
            attack: AttackConfig::none(NodeId(committee as u32 - 1)),
            aura_votes: true,
            vrf_threshold: 2.0 / committee as f64,
            wiggle_unit: 500,
            block_gas_limit: crate::chain::DEFAULT_BLOCK_GAS_LIMIT,
            mempool_cap: 1 << 20,
            record_log: false,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct RunCounters {
    /// Blocks sealed and broadcast, including attacker attempts that no one
    /// accepts.
    pub sealed_total: u64,
    pub sealed_by: Vec<u64>,
    pub injected_txs: u64,
    /// Consensus-verification failures observed across all nodes.
    pub rejected_blocks: u64,
    pub verify_calls: u64,
    /// Heights at which the attacker sealed a zero-delay difficulty-1 block
    /// (on any branch) while turn frontrunning was active.
    pub attacker_attempt_heights: Vec<u64>,
}

/// Final state of a run plus the replayable event log.
#[derive(Debug)]
pub struct SimResult {
    pub stores: Vec<ChainStore>,
    pub counters: RunCounters,
    pub log: Vec<LogRecord>,
}

#[derive(Debug, Clone)]
struct Planned {
    epoch: u64,
    tip: BlockId,
    timestamp: Millis,
    difficulty: u64,
    extra: SealExtra,
}

struct NodeState {
    id: NodeId,
    live: bool,
    clock_epoch: u64,
    proposal_epoch: u64,
    store: ChainStore,
    pool: Mempool,
    wiggle_rng: ChaCha8Rng,
    factory: AttackerTxFactory,
    // Aura vote gathering.
    votes: HashMap<BlockId, HashSet<NodeId>>,
    voted: HashSet<BlockId>,
    pending_accept: HashMap<BlockId, (Arc<Block>, Millis)>,
    // Blocks waiting for a missing parent, verified on connect.
    orphans: VecDeque<(Arc<Block>, Millis)>,
    planned: HashMap<u64, Planned>,
    next_plan_id: u64,
}

impl NodeState {
    fn is_attacker(&self, attack: &AttackConfig) -> bool {
        self.id == attack.attacker
    }
}

struct Shared {
    kind: ConsensusKind,
    aura: AuraConfig,
    clique: CliqueConfig,
    oracle: HardwareOracle,
    registry: KeyRegistry,
    vrf_threshold: f64,
    vrf_master: u64,
    attack: AttackConfig,
    committee: usize,
    mute: MutePlan,
}

impl Shared {
    /// The node whose mining is muted for `height`, if any.
    fn muted_leader(&self, height: u64) -> Option<NodeId> {
        let MutePlan::Leaders { cadence, exempt } = self.mute else {
            return None;
        };
        if !height.is_multiple_of(cadence.max(1)) {
            return None;
        }
        let leader = match self.kind {
            ConsensusKind::Hpb => hpb_in_turn_sealer(height, &self.oracle, &self.clique),
            _ => self.clique.sealers[(height % self.committee as u64) as usize],
        };
        if Some(leader) == exempt {
            None
        } else {
            Some(leader)
        }
    }
}

struct Ctx<'a> {
    now: Millis,
    /// Sequence number of the event being executed; send marks emitted
    /// while handling it share this number so the log stays (time, seq)
    /// ordered.
    cur_seq: u64,
    queue: &'a mut EventQueue,
    net: &'a mut NetworkModel,
    counters: &'a mut RunCounters,
    log: &'a mut Vec<LogRecord>,
    record_log: bool,
}

impl Ctx<'_> {
    fn log_send(&mut self, kind: &'static str, node: NodeId, digest: u64) {
        if self.record_log {
            let rec = LogRecord {
                time: self.now,
                seq: self.cur_seq,
                kind,
                node: node.0,
                digest,
            };
            self.log.push(rec);
        }
    }

    fn schedule(&mut self, at: Millis, node: NodeId, kind: EventKind) {
        self.queue.push(at, node, kind);
    }

    fn broadcast_tx(&mut self, from: NodeId, committee: usize, tx: &Arc<Transaction>) {
        self.log_send("bcast-tx", from, tx.id.0);
        for peer in 0..committee {
            let peer = NodeId(peer as u32);
            if peer == from {
                continue;
            }
            let delay = self.net.sample_delay(from, peer);
            self.schedule(self.now + delay, peer, EventKind::DeliverTx(tx.clone()));
        }
    }

    fn broadcast_block(&mut self, from: NodeId, committee: usize, block: &Arc<Block>) {
        self.log_send("bcast-block", from, block.id.0);
        for peer in 0..committee {
            let peer = NodeId(peer as u32);
            if peer == from {
                continue;
            }
            let delay = self.net.sample_delay(from, peer);
            self.schedule(
                self.now + delay,
                peer,
                EventKind::DeliverBlock {
                    block: block.clone(),
                    synced: false,
                },
            );
        }
    }

    fn broadcast_vote(&mut self, from: NodeId, committee: usize, vote: AuraVote) {
        self.log_send("bcast-vote", from, vote.block.0);
        for peer in 0..committee {
            let peer = NodeId(peer as u32);
            if peer == from {
                continue;
            }
            let delay = self.net.sample_delay(from, peer);
            self.schedule(self.now + delay, peer, EventKind::DeliverVote(vote));
        }
    }

    fn broadcast_request(&mut self, from: NodeId, committee: usize, id: BlockId) {
        for peer in 0..committee {
            let peer = NodeId(peer as u32);
            if peer == from {
                continue;
            }
            let delay = self.net.sample_delay(from, peer);
            self.schedule(
                self.now + delay,
                peer,
                EventKind::RequestBlock {
                    id,
                    requester: from,
                },
            );
        }
    }

    fn send_block(&mut self, from: NodeId, to: NodeId, block: &Arc<Block>) {
        let delay = self.net.sample_delay(from, to);
        self.schedule(
            self.now + delay,
            to,
            EventKind::DeliverBlock {
                block: block.clone(),
                synced: true,
            },
        );
    }
}

/// The shared hardware-randomness source a run with this seed uses.
pub fn oracle_for_run(seed: u64) -> HardwareOracle {
    HardwareOracle::new(derive_u64(seed, "hpb-oracle", 0))
}

/// Run the simulation to `setup.until` and return per-node chain stores,
/// counters and (optionally) the event log.
pub fn run(setup: &SimSetup) -> SimResult {
    let n = setup.committee;
    assert!(n >= 1, "committee must be non-empty");
    assert!(setup.until > 0);

    let aura_cfg = AuraConfig {
        duration: setup.period,
        sealers: (0..n as u32).map(NodeId).collect(),
        votes: setup.aura_votes,
    };
    let clique_cfg = CliqueConfig {
        sealers: (0..n as u32).map(NodeId).collect(),
        period: setup.period,
        wiggle_unit: setup.wiggle_unit,
    };
    let committee: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    let shared = Shared {
        kind: setup.consensus,
        aura: aura_cfg,
        clique: clique_cfg,
        oracle: oracle_for_run(setup.seed),
        registry: KeyRegistry::for_committee(derive_u64(setup.seed, "vrf-keys", 0), &committee),
        vrf_threshold: setup.vrf_threshold,
        vrf_master: derive_u64(setup.seed, "vrf-seeds", 0),
        attack: setup.attack.clone(),
        committee: n,
        mute: setup.mute,
    };

    let genesis = genesis_block();
    let mut nodes: Vec<NodeState> = (0..n as u32)
        .map(|i| NodeState {
            id: NodeId(i),
            live: true,
            clock_epoch: 0,
            proposal_epoch: 0,
            store: ChainStore::new(genesis.clone()),
            pool: Mempool::new(setup.block_gas_limit, setup.mempool_cap),
            wiggle_rng: derive_stream(setup.seed, "wiggle", i as u64, 0),
            factory: AttackerTxFactory::new(NodeId(i)),
            votes: HashMap::new(),
            voted: HashSet::new(),
            pending_accept: HashMap::new(),
            orphans: VecDeque::new(),
            planned: HashMap::new(),
            next_plan_id: 0,
        })
        .collect();

    let mut queue = EventQueue::default();
    let mut net = NetworkModel::new(setup.net, derive_u64(setup.seed, "net", 0));
    let mut counters = RunCounters {
        sealed_by: vec![0; n],
        ..RunCounters::default()
    };
    let mut log: Vec<LogRecord> = Vec::new();

    // Workload, faults, and initial consensus timers.
    counters.injected_txs = setup
        .workload
        .schedule(n, setup.until, derive_u64(setup.seed, "workload", 0), &mut queue);
    for entry in &setup.faults.entries {
        queue.push(entry.crash_at, entry.node, EventKind::NodeCrash);
        if let Some(r) = entry.recover_at {
            queue.push(r, entry.node, EventKind::NodeRecover);
        }
    }
    {
        let mut ctx = Ctx {
            now: 0,
            cur_seq: 0,
            queue: &mut queue,
            net: &mut net,
            counters: &mut counters,
            log: &mut log,
            record_log: setup.record_log,
        };
        for node in nodes.iter_mut() {
            match shared.kind {
                ConsensusKind::Aura => {
                    let epoch = node.clock_epoch;
                    ctx.schedule(
                        shared.aura.duration,
                        node.id,
                        EventKind::TimerFire(TimerKind::AuraStep { epoch }),
                    );
                }
                _ => plan_proposal(node, &shared, &mut ctx),
            }
        }
    }

    // Main loop: strict (at, seq) order, crashed nodes neither send nor
    // process.
    while let Some(ev) = queue.pop() {
        if ev.at > setup.until {
            break;
        }
        let SimEvent {
            at,
            seq,
            node: node_id,
            kind,
        } = ev;
        let idx = node_id.index();
        let mut ctx = Ctx {
            now: at,
            cur_seq: seq,
            queue: &mut queue,
            net: &mut net,
            counters: &mut counters,
            log: &mut log,
            record_log: setup.record_log,
        };
        match kind {
            EventKind::NodeCrash => {
                let node = &mut nodes[idx];
                node.live = false;
                node.clock_epoch += 1;
                node.proposal_epoch += 1;
                node.planned.clear();
                record(&mut ctx, at, seq, "node-crash", node_id, 0);
            }
            EventKind::NodeRecover => {
                let node = &mut nodes[idx];
                node.live = true;
                node.clock_epoch += 1;
                node.proposal_epoch += 1;
                record(&mut ctx, at, seq, "node-recover", node_id, 0);
                match shared.kind {
                    ConsensusKind::Aura => {
                        // Re-arm the step clock at the next boundary.
                        let next = (at / shared.aura.duration + 1) * shared.aura.duration;
                        let epoch = node.clock_epoch;
                        ctx.schedule(
                            next,
                            node_id,
                            EventKind::TimerFire(TimerKind::AuraStep { epoch }),
                        );
                    }
                    _ => {
                        // Stay quiet for one period so the running chain can
                        // catch us up; if nothing arrives, re-plan from the
                        // local tip.
                        let epoch = node.proposal_epoch;
                        ctx.schedule(
                            at + shared.clique.period,
                            node_id,
                            EventKind::TimerFire(TimerKind::RecoveryReplan { epoch }),
                        );
                    }
                }
            }
            other => {
                let node = &mut nodes[idx];
                if !node.live {
                    continue; // dropped, not queued
                }
                if setup.record_log {
                    record(&mut ctx, at, seq, other.name(), node_id, other.digest());
                }
                dispatch(node, &shared, &mut ctx, other);
            }
        }
    }

    SimResult {
        stores: nodes.into_iter().map(|n| n.store).collect(),
        counters,
        log,
    }
}

fn record(ctx: &mut Ctx, at: Millis, seq: u64, kind: &'static str, node: NodeId, digest: u64) {
    if ctx.record_log {
        ctx.log.push(LogRecord {
            time: at,
            seq,
            kind,
            node: node.0,
            digest,
        });
    }
}

fn dispatch(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx, kind: EventKind) {
    match kind {
        EventKind::InjectTx { seq, gas_price } => {
            let tx = Arc::new(Transaction {
                id: TxId::user(node.id, seq),
                sender: AccountId::user(node.id, seq),
                nonce: 0,
                gas_price,
                gas_limit: crate::chain::DEFAULT_TX_GAS,
                arrival_time: ctx.now,
                kind: TxKind::User,
            });
            if node.pool.validate_tx(&tx) {
                ctx.broadcast_tx(node.id, shared.committee, &tx);
            }
        }
        EventKind::DeliverTx(tx) => {
            node.pool.validate_tx(&tx);
        }
        EventKind::DeliverBlock { block, synced } => {
            receive_block(node, shared, ctx, block, synced);
        }
        EventKind::DeliverVote(vote) => {
            node.votes.entry(vote.block).or_default().insert(vote.voter);
            try_accept(node, shared, ctx, vote.block);
        }
        EventKind::RequestBlock { id, requester } => {
            if let Some(block) = node.store.block(id).cloned() {
                ctx.send_block(node.id, requester, &block);
            }
        }
        EventKind::TimerFire(TimerKind::AuraStep { epoch }) => {
            if epoch != node.clock_epoch {
                return;
            }
            // Re-arm first so the chain of step timers survives any path.
            let next = (ctx.now / shared.aura.duration + 1) * shared.aura.duration;
            ctx.schedule(
                next,
                node.id,
                EventKind::TimerFire(TimerKind::AuraStep { epoch }),
            );
            aura_on_step(node, shared, ctx);
        }
        EventKind::TimerFire(TimerKind::ProposalFire { epoch: plan_id }) => {
            let Some(plan) = node.planned.remove(&plan_id) else {
                return;
            };
            if plan.epoch != node.proposal_epoch {
                return;
            }
            fire_proposal(node, shared, ctx, plan);
        }
        EventKind::TimerFire(TimerKind::RecoveryReplan { epoch }) => {
            if epoch != node.proposal_epoch {
                return;
            }
            plan_proposal(node, shared, ctx);
        }
        EventKind::NodeCrash | EventKind::NodeRecover => unreachable!("handled by the loop"),
    }
}

/// Body for a block this node is about to seal on `parent`: honest-order
/// pool prefix, adjusted for any divergence between the local canonical
/// chain (which pruned the pool) and the parent's branch, manipulated when
/// the sealer is the attacker.
fn build_body(
    node: &mut NodeState,
    shared: &Shared,
    now: Millis,
    parent: BlockId,
) -> Vec<Transaction> {
    let attack = &shared.attack;
    if node.is_attacker(attack) && attack.empty_blocks {
        return Vec::new();
    }
    let order = if parent == node.store.tip() {
        node.pool.pop_for_block()
    } else {
        // Building on a fork: transactions confirmed only on the canonical
        // side are pending again here, and the fork side's own inclusions
        // must not repeat.
        let (popped, pushed) = node.store.reorg_path(node.store.tip(), parent);
        let included: HashSet<TxId> = pushed
            .iter()
            .flat_map(|b| b.txs.iter().map(|t| t.id))
            .collect();
        let mut candidates: Vec<Transaction> = node
            .pool
            .honest_order()
            .into_iter()
            .filter(|t| !included.contains(&t.id))
            .collect();
        for b in &popped {
            for t in &b.txs {
                if t.is_user() && !included.contains(&t.id) {
                    candidates.push(t.clone());
                }
            }
        }
        candidates.sort_by_key(crate::chain::honest_order_key);
        candidates.dedup_by_key(|t| t.id);
        let mut gas = 0u64;
        let limit = node.pool.block_gas_limit();
        candidates
            .into_iter()
            .take_while(|t| {
                gas += t.gas_limit;
                gas <= limit
            })
            .collect()
    };
    if !node.is_attacker(attack) {
        return order;
    }
    match attack.type1 {
        Type1Mode::Off => order,
        Type1Mode::Displacement => {
            attack_order_displacement(order, attack.target, &mut node.factory, now)
        }
        Type1Mode::Insertion => {
            attack_order_insertion(order, attack.target, &mut node.factory, now)
        }
    }
}

fn aura_on_step(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx) {
    let step = aura_step(ctx.now, &shared.aura);
    let leader = aura_leader(step, &shared.aura);
    let me = node.id;
    let attacker_t2 = node.is_attacker(&shared.attack) && shared.attack.type2;
    if leader == me && shared.muted_leader(step) == Some(me) {
        return; // set to sleep for this step
    }
    if leader == me {
        let tip = node.store.tip_block().clone();
        let body = build_body(node, shared, ctx.now, tip.id);
        let block = build_block(&tip, me, 2, ctx.now, body, SealExtra::None);
        ctx.counters.sealed_total += 1;
        ctx.counters.sealed_by[me.index()] += 1;
        if shared.aura.votes {
            node.pending_accept.insert(block.id, (block.clone(), ctx.now));
            node.votes.entry(block.id).or_default().insert(me);
            node.voted.insert(block.id);
        } else {
            do_insert(node, shared, ctx, block.clone(), ctx.now);
        }
        ctx.broadcast_block(me, shared.committee, &block);
    } else if attacker_t2 {
        // Out-of-turn zero-delay attempt: difficulty 1 like an edge-turn
        // claim. Identity-coupled verification rejects it everywhere, so it
        // is not self-inserted either.
        let tip = node.store.tip_block().clone();
        let body = build_body(node, shared, ctx.now, tip.id);
        let block = build_block(&tip, me, 1, ctx.now, body, SealExtra::None);
        ctx.counters.sealed_total += 1;
        ctx.counters.sealed_by[me.index()] += 1;
        ctx.broadcast_block(me, shared.committee, &block);
    }
}

/// Decide and schedule this node's next proposal for the height above its
/// canonical tip (Clique family, HPB and VRF).
fn plan_proposal(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx) {
    node.proposal_epoch += 1;
    node.planned.clear();
    let epoch = node.proposal_epoch;
    let me = node.id;
    let attacker_t2 = node.is_attacker(&shared.attack) && shared.attack.type2;
    let tip = node.store.tip_block().clone();
    let next = tip.number() + 1;
    let scheduled = tip.timestamp() + shared.clique.period;
    let timestamp = scheduled.max(ctx.now);

    // A muted in-turn sealer skips its own proposal for this height. If the
    // covered height somehow stays unresolved for two whole periods (a fork
    // standoff where every eligible sealer is barred on its own branch), the
    // sleeper wakes and seals after all so the chain cannot deadlock.
    if shared.muted_leader(next) == Some(me) {
        if shared.kind == ConsensusKind::Vrf {
            return; // retries by other candidates keep VRF live
        }
        let wake_at = scheduled + 2 * shared.clique.period;
        if ctx.now < wake_at {
            ctx.schedule(
                wake_at,
                me,
                EventKind::TimerFire(TimerKind::RecoveryReplan { epoch }),
            );
            return;
        }
    }

    let mut plans: Vec<(Millis, Planned)> = Vec::new();
    match shared.kind {
        ConsensusKind::Aura => unreachable!("aura is clock-driven"),
        ConsensusKind::Clique | ConsensusKind::CliquePatched => {
            let window = RecentSigners::for_child_of(&node.store, tip.id, &shared.clique);
            if sign_recently(me, next, &window, &shared.clique) {
                return;
            }
            let in_turn = clique_in_turn(next, me.index(), &shared.clique);
            if shared.kind == ConsensusKind::CliquePatched && !in_turn && !attacker_t2 {
                // Under the identity check only the designated edge-turn
                // sealer bothers proposing a difficulty-1 block.
                if expected_edge_turn(next, &window, &shared.clique) != Some(me) {
                    return;
                }
            }
            let difficulty = if in_turn { 2 } else { 1 };
            // wiggle_delay folds in the wait-until-scheduled base, so the
            // fire instant is now + delay; in-turn fires exactly at the
            // scheduled block time, and the attacker forfeits its wiggle.
            let fire_at = if in_turn {
                scheduled.max(ctx.now)
            } else if attacker_t2 {
                zero_delay_send_at(scheduled, ctx.now)
            } else {
                ctx.now + wiggle_delay(&shared.clique, &mut node.wiggle_rng, scheduled, ctx.now)
            };
            plans.push((
                fire_at,
                Planned {
                    epoch,
                    tip: tip.id,
                    timestamp,
                    difficulty,
                    extra: SealExtra::None,
                },
            ));
        }
        ConsensusKind::Hpb => {
            let trace = shared.oracle.sample(next);
            let leader = hpb_in_turn_sealer(next, &shared.oracle, &shared.clique);
            let fallback = hpb_fallback_sealer(next, trace, &shared.clique);
            let (difficulty, fire_at) = if me == leader {
                (2, scheduled.max(ctx.now))
            } else if me == fallback && !attacker_t2 {
                (
                    1,
                    ctx.now + wiggle_delay(&shared.clique, &mut node.wiggle_rng, scheduled, ctx.now),
                )
            } else if me == fallback || attacker_t2 {
                (1, zero_delay_send_at(scheduled, ctx.now))
            } else {
                return;
            };
            plans.push((
                fire_at,
                Planned {
                    epoch,
                    tip: tip.id,
                    timestamp,
                    difficulty,
                    extra: SealExtra::HpbTrace(trace),
                },
            ));
        }
        ConsensusKind::Vrf => {
            let pair = shared.registry.pair_of(me).expect("registered sealer");
            let retry_step = shared.clique.period / 2;
            for retry in 0..VRF_MAX_RETRIES {
                let s = vrf_seed(shared.vrf_master, next, retry);
                let hs = vrf_hash(&pair.sk, &s);
                let candidate = vrf_is_candidate(&hs, shared.vrf_threshold);
                let attempt = candidate || (attacker_t2 && retry == 0);
                if !attempt {
                    continue;
                }
                let jitter = if attacker_t2 {
                    0
                } else {
                    // Deterministic per-(node, height, retry) stagger so
                    // simultaneous candidates rarely collide.
                    u64::from_be_bytes(hs[8..16].try_into().expect("8 bytes"))
                        % (shared.clique.period / 4).max(1)
                };
                let proof = vrf_prove(&pair.sk, &s);
                plans.push((
                    scheduled.max(ctx.now) + retry as u64 * retry_step + jitter,
                    Planned {
                        epoch,
                        tip: tip.id,
                        timestamp,
                        difficulty: 2,
                        extra: SealExtra::Vrf {
                            retry,
                            hash: hs,
                            proof,
                        },
                    },
                ));
            }
        }
    }

    for (fire_at, plan) in plans {
        let plan_id = node.next_plan_id;
        node.next_plan_id += 1;
        node.planned.insert(plan_id, plan);
        ctx.schedule(
            fire_at,
            me,
            EventKind::TimerFire(TimerKind::ProposalFire { epoch: plan_id }),
        );
    }
}

fn fire_proposal(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx, plan: Planned) {
    let me = node.id;
    let body = build_body(node, shared, ctx.now, plan.tip);
    let tip = node
        .store
        .block(plan.tip)
        .expect("planned tip stays stored")
        .clone();
    let block = build_block(&tip, me, plan.difficulty, plan.timestamp, body, plan.extra);
    ctx.counters.sealed_total += 1;
    ctx.counters.sealed_by[me.index()] += 1;
    if node.is_attacker(&shared.attack) && shared.attack.type2 && plan.difficulty == 1 {
        ctx.counters.attacker_attempt_heights.push(block.number());
    }
    if verify_for(node, shared, ctx, &block) {
        do_insert(node, shared, ctx, block.clone(), ctx.now);
    }
    ctx.broadcast_block(me, shared.committee, &block);
}

/// Consensus verification against the block's own branch.
fn verify_for(node: &NodeState, shared: &Shared, ctx: &mut Ctx, block: &Block) -> bool {
    ctx.counters.verify_calls += 1;
    let Some(parent) = node.store.block(block.header.parent) else {
        return false;
    };
    let parent_ts = parent.timestamp();
    match shared.kind {
        ConsensusKind::Aura => aura_verify(block, &shared.aura),
        ConsensusKind::Clique => {
            let window = RecentSigners::for_child_of(&node.store, parent.id, &shared.clique);
            clique_verify(block, &shared.clique, &window, parent_ts)
        }
        ConsensusKind::CliquePatched => {
            let window = RecentSigners::for_child_of(&node.store, parent.id, &shared.clique);
            clique_verify_patched(block, &shared.clique, &window, parent_ts)
        }
        ConsensusKind::Hpb => hpb_verify(block, &shared.oracle, &shared.clique, parent_ts),
        ConsensusKind::Vrf => {
            let SealExtra::Vrf { retry, hash, proof } = &block.header.extra else {
                return false;
            };
            if *retry >= VRF_MAX_RETRIES || block.difficulty() != 2 {
                return false;
            }
            let Some(pair) = shared.registry.pair_of(block.sealer()) else {
                return false;
            };
            let s = vrf_seed(shared.vrf_master, block.number(), *retry);
            vrf_verify(&shared.registry, &pair.pk, &s, hash, proof)
                && vrf_is_candidate(hash, shared.vrf_threshold)
                && block.timestamp() >= parent_ts + shared.clique.period
        }
    }
}

fn receive_block(
    node: &mut NodeState,
    shared: &Shared,
    ctx: &mut Ctx,
    block: Arc<Block>,
    synced: bool,
) {
    if node.store.contains(block.id) || node.pending_accept.contains_key(&block.id) {
        return;
    }
    if !node.store.contains(block.header.parent) {
        if node.orphans.iter().any(|(b, _)| b.id == block.id) {
            return;
        }
        if node.orphans.len() >= crate::chain::ORPHAN_BUFFER_LIMIT {
            node.orphans.pop_front();
        }
        let parent = block.header.parent;
        node.orphans.push_back((block, ctx.now));
        ctx.broadcast_request(node.id, shared.committee, parent);
        return;
    }
    connect_verified(node, shared, ctx, block, ctx.now, synced);
    drain_orphans(node, shared, ctx);
}

fn connect_verified(
    node: &mut NodeState,
    shared: &Shared,
    ctx: &mut Ctx,
    block: Arc<Block>,
    arrival: Millis,
    synced: bool,
) {
    if !synced && !verify_for(node, shared, ctx, &block) {
        ctx.counters.rejected_blocks += 1;
        return;
    }
    if shared.kind == ConsensusKind::Aura && shared.aura.votes && !synced {
        // Two-phase acceptance: hold the block until a majority endorses it.
        let me = node.id;
        let entry = node.votes.entry(block.id).or_default();
        entry.insert(block.sealer()); // proposing is an implicit vote
        entry.insert(me);
        if node.voted.insert(block.id) {
            ctx.broadcast_vote(
                me,
                shared.committee,
                AuraVote {
                    voter: me,
                    block: block.id,
                },
            );
        }
        node.pending_accept.insert(block.id, (block.clone(), arrival));
        try_accept(node, shared, ctx, block.id);
        return;
    }
    do_insert(node, shared, ctx, block, arrival);
}

fn try_accept(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx, id: BlockId) {
    if shared.kind != ConsensusKind::Aura || !shared.aura.votes {
        return;
    }
    let Some((block, arrival)) = node.pending_accept.get(&id).cloned() else {
        return;
    };
    if !node.store.contains(block.header.parent) {
        return;
    }
    let default = HashSet::new();
    let voters = node.votes.get(&id).unwrap_or(&default);
    let votes: HashSet<AuraVote> = voters
        .iter()
        .map(|&voter| AuraVote { voter, block: id })
        .collect();
    if !aura_accept(&votes, id, &shared.aura) {
        return;
    }
    node.pending_accept.remove(&id);
    do_insert(node, shared, ctx, block, arrival);
}

fn do_insert(
    node: &mut NodeState,
    shared: &Shared,
    ctx: &mut Ctx,
    block: Arc<Block>,
    arrival: Millis,
) {
    let old_tip = node.store.tip();
    match node.store.insert_block(block, arrival) {
        InsertOutcome::Connected { tip, tip_changed } => {
            if tip_changed {
                let (popped, pushed) = node.store.reorg_path(old_tip, tip);
                for b in &popped {
                    node.pool.disconnect_block(b);
                }
                for b in &pushed {
                    node.pool.connect_block(b);
                }
                if shared.kind != ConsensusKind::Aura {
                    plan_proposal(node, shared, ctx);
                }
            }
            // Parents that arrived may unblock vote-gated children.
            if shared.kind == ConsensusKind::Aura && shared.aura.votes {
                let ready: Vec<BlockId> = node
                    .pending_accept
                    .iter()
                    .filter(|(_, (b, _))| node.store.contains(b.header.parent))
                    .map(|(id, _)| *id)
                    .collect();
                for id in ready {
                    try_accept(node, shared, ctx, id);
                }
            }
        }
        InsertOutcome::Orphaned | InsertOutcome::Duplicate | InsertOutcome::Rejected => {}
    }
}

fn drain_orphans(node: &mut NodeState, shared: &Shared, ctx: &mut Ctx) {
    loop {
        let mut progressed = false;
        let pending: Vec<(Arc<Block>, Millis)> = node.orphans.drain(..).collect();
        let mut rest = VecDeque::new();
        for (orphan, at) in pending {
            if node.store.contains(orphan.id) {
                continue;
            }
            if node.store.contains(orphan.header.parent) {
                connect_verified(node, shared, ctx, orphan, at, false);
                progressed = true;
            } else {
                rest.push_back((orphan, at));
            }
        }
        node.orphans = rest;
        if !progressed {
            return;
        }
    }
}
