//! Clique: block-number-based in-turn selection, multi-proposer rounds with
//! random wiggle delays, recently-signed windows, and difficulty-only
//! verification of edge-turn blocks.
//!
//! The in-turn sealer of height `h` is `sealers[h mod N]` and seals with
//! difficulty 2 at the scheduled block time. Every other sealer outside the
//! recently-signed window may also seal, with difficulty 1, after a random
//! extra delay bounded by `(floor(N/2)+1) * 500 ms`. Verification checks the
//! window and that difficulty-2 blocks come from the in-turn sealer — but
//! for difficulty-1 blocks the sealer identity is not matched against any
//! expected proposer, which is the gap the turn-frontrunning attack uses.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::chain::{build_block, Block, BlockId, ChainStore, Mempool, Millis, NodeId, SealExtra};

#[derive(Debug, Clone)]
pub struct CliqueConfig {
    /// Committee in rotation order, no duplicates.
    pub sealers: Vec<NodeId>,
    /// Target block time, simulated milliseconds.
    pub period: Millis,
    /// Wiggle granularity per window slot; 500 ms in the reference client.
    pub wiggle_unit: Millis,
}

impl CliqueConfig {
    pub fn new(period: Millis, committee: usize) -> Self {
        assert!(period > 0);
        assert!(committee >= 1);
        CliqueConfig {
            sealers: (0..committee as u32).map(NodeId).collect(),
            period,
            wiggle_unit: 500,
        }
    }

    pub fn committee_size(&self) -> usize {
        self.sealers.len()
    }

    /// Recently-signed window length: `floor(N/2) + 1`.
    pub fn window(&self) -> u64 {
        self.sealers.len() as u64 / 2 + 1
    }

    /// Upper bound of the random extra delay for edge-turn sealing.
    pub fn wiggle_bound(&self) -> Millis {
        self.window() * self.wiggle_unit
    }
}

/// Sealers of the last `floor(N/2)+1` canonical blocks, by height.
#[derive(Debug, Clone, Default)]
pub struct RecentSigners {
    recents: BTreeMap<u64, NodeId>,
}

impl RecentSigners {
    /// Record the sealer of `number`, trimming the window for queries about
    /// height `number + 1`.
    pub fn apply(&mut self, number: u64, sealer: NodeId, cfg: &CliqueConfig) {
        self.recents.insert(number, sealer);
        let window = cfg.window();
        if number + 1 > window {
            let keep_from = number + 1 - window;
            self.recents = self.recents.split_off(&keep_from);
        }
    }

    /// Window for sealing height `next_number`, reconstructed from the
    /// block tree along `parent`'s ancestry. Verification uses the window of
    /// the block's own branch, not the verifier's current canonical chain.
    pub fn for_child_of(store: &ChainStore, parent: BlockId, cfg: &CliqueConfig) -> Self {
        let mut recents = BTreeMap::new();
        let mut cur = parent;
        for _ in 0..cfg.window() {
            let Some(block) = store.block(cur) else { break };
            if block.number() == 0 {
                break;
            }
            recents.insert(block.number(), block.sealer());
            cur = block.header.parent;
        }
        RecentSigners { recents }
    }

    pub fn contains(&self, sealer: NodeId) -> bool {
        self.recents.values().any(|&s| s == sealer)
    }

    pub fn signers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.recents.values().copied()
    }
}

/// `true` iff `next_number mod N` selects `sealer_index`.
pub fn clique_in_turn(next_number: u64, sealer_index: usize, cfg: &CliqueConfig) -> bool {
    next_number % cfg.sealers.len() as u64 == sealer_index as u64
}

/// The in-turn sealer for a height.
pub fn in_turn_sealer(next_number: u64, cfg: &CliqueConfig) -> NodeId {
    cfg.sealers[(next_number % cfg.sealers.len() as u64) as usize]
}

/// `true` iff the sealer signed one of the last `floor(N/2)+1` canonical
/// blocks and therefore must wait. At most `N - (floor(N/2)+1)` distinct
/// sealers are eligible per height.
pub fn sign_recently(
    sealer: NodeId,
    _next_number: u64,
    window: &RecentSigners,
    _cfg: &CliqueConfig,
) -> bool {
    window.contains(sealer)
}

/// Random extra delay for an out-of-turn proposal:
/// `base + uniform(0..=wiggle_bound)` where `base = max(0, scheduled - now)`.
pub fn wiggle_delay<R: Rng>(
    cfg: &CliqueConfig,
    rng: &mut R,
    scheduled: Millis,
    now: Millis,
) -> Millis {
    let base = scheduled.saturating_sub(now);
    base + rng.gen_range(0..=cfg.wiggle_bound())
}

/// One-shot proposal decision: `None` while recently signed, otherwise a
/// sealed block extending `tip` plus the simulated instant it should be
/// sent. In-turn seals difficulty 2 at the scheduled time; edge-turn seals
/// difficulty 1 after the wiggle.
pub fn clique_propose<R: Rng>(
    sealer: NodeId,
    now: Millis,
    pool: &Mempool,
    cfg: &CliqueConfig,
    tip: &Block,
    window: &RecentSigners,
    rng: &mut R,
) -> Option<(Arc<Block>, Millis)> {
    debug_assert!(cfg.sealers.contains(&sealer));
    let next = tip.number() + 1;
    if sign_recently(sealer, next, window, cfg) {
        return None;
    }
    let scheduled = tip.timestamp() + cfg.period;
    let timestamp = scheduled.max(now);
    let (difficulty, send_at) = if clique_in_turn(next, sealer.index(), cfg) {
        (2, scheduled.max(now))
    } else {
        (1, now + wiggle_delay(cfg, rng, scheduled, now))
    };
    let block = build_block(
        tip,
        sealer,
        difficulty,
        timestamp,
        pool.pop_for_block(),
        SealExtra::None,
    );
    Some((block, send_at))
}

/// Difficulty-only verification: difficulty must be 1 or 2, the sealer must
/// be outside the recently-signed window, a difficulty-2 block must come
/// from the in-turn sealer, and the timestamp must respect the period. For
/// difficulty 1 the sealer's identity is not matched against any expected
/// proposer.
pub fn clique_verify(
    block: &Block,
    cfg: &CliqueConfig,
    window: &RecentSigners,
    parent_timestamp: Millis,
) -> bool {
    let diff = block.difficulty();
    if diff != 1 && diff != 2 {
        return false;
    }
    if !cfg.sealers.contains(&block.sealer()) {
        return false;
    }
    if sign_recently(block.sealer(), block.number(), window, cfg) {
        return false;
    }
    if diff == 2 && !clique_in_turn(block.number(), block.sealer().index(), cfg) {
        return false;
    }
    block.timestamp() >= parent_timestamp + cfg.period
}
