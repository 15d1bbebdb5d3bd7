//! Aura (Authority Round): UNIX-time step-based leader selection, a single
//! proposer per step, identity-coupled difficulty verification and majority
//! acceptance.
//!
//! All authorities share the simulated clock exactly. The leader of step
//! `T / duration` is `sealers[step mod N]`; it seals with difficulty 2 even
//! when the pool is empty. A verifier recomputes the expected difficulty for
//! the block's claimed sealer at the block's step (derived from the header
//! timestamp) and accepts only on an exact match, which is what makes
//! out-of-turn proposals unverifiable.

use std::collections::HashSet;
use std::sync::Arc;

use crate::chain::{build_block, Block, BlockId, Mempool, Millis, NodeId, SealExtra};

#[derive(Debug, Clone)]
pub struct AuraConfig {
    /// Step length in simulated milliseconds.
    pub duration: Millis,
    /// Committee in rotation order, no duplicates.
    pub sealers: Vec<NodeId>,
    /// Gate chain insertion on majority votes (the two-phase reading of the
    /// protocol). Off reproduces the bare propose/verify loop.
    pub votes: bool,
}

impl AuraConfig {
    pub fn new(duration: Millis, committee: usize) -> Self {
        assert!(duration > 0);
        assert!(committee >= 1);
        AuraConfig {
            duration,
            sealers: (0..committee as u32).map(NodeId).collect(),
            votes: true,
        }
    }

    pub fn committee_size(&self) -> usize {
        self.sealers.len()
    }
}

/// One sealer's endorsement of a proposed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuraVote {
    pub voter: NodeId,
    pub block: BlockId,
}

/// `step = floor(T / duration)`.
pub fn aura_step(t: Millis, cfg: &AuraConfig) -> u64 {
    t / cfg.duration
}

/// The step's unique leader: `sealers[step mod N]`.
pub fn aura_leader(step: u64, cfg: &AuraConfig) -> NodeId {
    cfg.sealers[(step % cfg.sealers.len() as u64) as usize]
}

/// Leader-only block production for the step containing `t`. Non-leaders
/// produce nothing; the leader seals the honest-order pool prefix (possibly
/// empty) with difficulty 2 and timestamp `t`.
pub fn aura_propose(
    sealer: NodeId,
    t: Millis,
    pool: &Mempool,
    cfg: &AuraConfig,
    tip: &Block,
) -> Option<Arc<Block>> {
    debug_assert!(cfg.sealers.contains(&sealer));
    let step = aura_step(t, cfg);
    if aura_leader(step, cfg) != sealer {
        return None;
    }
    Some(build_block(
        tip,
        sealer,
        2,
        t,
        pool.pop_for_block(),
        SealExtra::None,
    ))
}

/// Difficulty coupled to identity: 2 iff the claimed sealer leads the step
/// derived from the block timestamp, else 0.
pub fn calculate_difficulty(timestamp: Millis, sealer: NodeId, cfg: &AuraConfig) -> u64 {
    if aura_leader(aura_step(timestamp, cfg), cfg) == sealer {
        2
    } else {
        0
    }
}

/// Accept iff the recomputed difficulty equals the header's.
pub fn aura_verify(block: &Block, cfg: &AuraConfig) -> bool {
    calculate_difficulty(block.timestamp(), block.sealer(), cfg) == block.difficulty()
}

/// Majority acceptance: distinct committee voters for `block` exceed N/2.
pub fn aura_accept(votes: &HashSet<AuraVote>, block: BlockId, cfg: &AuraConfig) -> bool {
    let distinct: HashSet<NodeId> = votes
        .iter()
        .filter(|v| v.block == block && cfg.sealers.contains(&v.voter))
        .map(|v| v.voter)
        .collect();
    distinct.len() * 2 > cfg.sealers.len()
}
