//! Hardware-randomness rotation. One shared entropy source (here a seeded
//! deterministic stream standing in for the FPGA device) drives both the
//! per-round miner selection and the verification of claimed identities:
//! the proposer samples `trace`, verifiers sample `tag` from the same source
//! for the same round, and a difficulty-1 block is accepted only from the
//! miner the randomness designates. Selection follows the oracle stream, not
//! the block number, so turns are unpredictable without the source.

use sha2::{Digest, Sha256};

use crate::chain::{Block, Millis, NodeId, SealExtra};
use crate::clique::CliqueConfig;

/// Simulated shared randomness source. All nodes sampling the same round
/// obtain the same value; a desynchronized seed models a misconfigured
/// device.
#[derive(Debug, Clone, Copy)]
pub struct HardwareOracle {
    pub seed: u64,
}

impl HardwareOracle {
    pub fn new(seed: u64) -> Self {
        HardwareOracle { seed }
    }

    /// Deterministic round -> randomness map.
    pub fn sample(&self, round: u64) -> u64 {
        let mut h = Sha256::new();
        h.update(b"hpb-oracle");
        h.update(self.seed.to_be_bytes());
        h.update(round.to_be_bytes());
        let d = h.finalize();
        let mut eight = [0u8; 8];
        eight.copy_from_slice(&d[..8]);
        u64::from_be_bytes(eight)
    }
}

/// Weight-2 miner of a round: `sealers[(trace + 1) mod N]`.
pub fn hpb_in_turn_sealer(round: u64, oracle: &HardwareOracle, cfg: &CliqueConfig) -> NodeId {
    let trace = oracle.sample(round);
    cfg.sealers[((trace.wrapping_add(1)) % cfg.sealers.len() as u64) as usize]
}

/// Designated weight-1 fallback, `calcMiner(header.number, tag)`: realized
/// as `sealers[(tag + number) mod N]`, a deterministic tag-dependent map
/// that mixes in the height so a stalled oracle stream does not repeat
/// winners.
pub fn hpb_fallback_sealer(number: u64, tag: u64, cfg: &CliqueConfig) -> NodeId {
    cfg.sealers[((tag.wrapping_add(number)) % cfg.sealers.len() as u64) as usize]
}

/// One-shot proposal decision under hardware-randomness rotation: the
/// selected miner seals weight 2 and broadcasts immediately; the designated
/// fallback seals weight 1 after a wiggle delay; everyone else stays quiet.
/// The sampled trace rides in the header so verifiers can match it against
/// their own tag.
pub fn hpb_propose<R: rand::Rng>(
    sealer: NodeId,
    pool: &crate::chain::Mempool,
    oracle: &HardwareOracle,
    cfg: &CliqueConfig,
    tip: &Block,
    now: Millis,
    rng: &mut R,
) -> Option<(std::sync::Arc<Block>, Millis)> {
    debug_assert!(cfg.sealers.contains(&sealer));
    let round = tip.number() + 1;
    let trace = oracle.sample(round);
    let scheduled = tip.timestamp() + cfg.period;
    let (weight, send_at) = if sealer == hpb_in_turn_sealer(round, oracle, cfg) {
        (2, scheduled.max(now))
    } else if sealer == hpb_fallback_sealer(round, trace, cfg) {
        (
            1,
            now + crate::clique::wiggle_delay(cfg, rng, scheduled, now),
        )
    } else {
        return None;
    };
    let block = crate::chain::build_block(
        tip,
        sealer,
        weight,
        scheduled.max(now),
        pool.pop_for_block(),
        SealExtra::HpbTrace(trace),
    );
    Some((block, send_at))
}

/// Verify a block against the verifier's own oracle sample for the round:
/// the carried trace must equal the local tag, difficulty must be 1 or 2,
/// and the sealer must be exactly the identity the randomness designates for
/// that difficulty.
pub fn hpb_verify(
    block: &Block,
    oracle: &HardwareOracle,
    cfg: &CliqueConfig,
    parent_timestamp: Millis,
) -> bool {
    let SealExtra::HpbTrace(trace) = block.header.extra else {
        return false;
    };
    let tag = oracle.sample(block.number());
    if trace != tag {
        return false;
    }
    let diff = block.difficulty();
    if diff != 1 && diff != 2 {
        return false;
    }
    if !cfg.sealers.contains(&block.sealer()) {
        return false;
    }
    if diff == 2 && block.sealer() != hpb_in_turn_sealer(block.number(), oracle, cfg) {
        return false;
    }
    if diff == 1 && block.sealer() != hpb_fallback_sealer(block.number(), tag, cfg) {
        return false;
    }
    block.timestamp() >= parent_timestamp + cfg.period
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_block, genesis_block};

    fn cfg9() -> CliqueConfig {
        CliqueConfig::new(3000, 9)
    }

    #[test]
    fn selection_follows_oracle_not_block_number() {
        let cfg = cfg9();
        let oracle = HardwareOracle::new(0xfeed);
        // trace + 1 mod N designates the miner.
        for round in 0..64u64 {
            let trace = oracle.sample(round);
            let want = cfg.sealers[((trace + 1) % 9) as usize];
            assert_eq!(hpb_in_turn_sealer(round, &oracle, &cfg), want);
        }
        // Not the fixed round-robin: some round must deviate from
        // sealers[round mod N].
        let deviates = (0..64u64)
            .any(|r| hpb_in_turn_sealer(r, &oracle, &cfg) != cfg.sealers[(r % 9) as usize]);
        assert!(deviates);

        // Frequency check over many rounds: every sealer is selected, and no
        // sealer dominates (loose uniformity bound, seed frozen).
        let mut counts = [0usize; 9];
        let rounds = 9000;
        for r in 0..rounds {
            counts[hpb_in_turn_sealer(r, &oracle, &cfg).index()] += 1;
        }
        let expected = rounds as f64 / 9.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 8 degrees of freedom; 26.12 is the 0.1% tail.
        assert!(chi2 < 26.12, "chi2 {chi2}, counts {counts:?}");
    }

    #[test]
    fn trace_equals_tag_example() {
        let cfg = cfg9();
        let oracle = HardwareOracle::new(1);
        // trace = 8 -> sealers[0] mines the round (direct arithmetic check
        // of the selection formula).
        assert_eq!(cfg.sealers[((8u64 + 1) % 9) as usize], NodeId(0));
        let _ = oracle;
    }

    #[test]
    fn verify_accepts_designated_and_rejects_wrong_identity() {
        let cfg = cfg9();
        let oracle = HardwareOracle::new(7);
        let g = genesis_block();
        let tag = oracle.sample(1);

        let leader = hpb_in_turn_sealer(1, &oracle, &cfg);
        let good = build_block(&g, leader, 2, 3000, Vec::new(), SealExtra::HpbTrace(tag));
        assert!(hpb_verify(&good, &oracle, &cfg, 0));

        let fallback = hpb_fallback_sealer(1, tag, &cfg);
        let fb = build_block(&g, fallback, 1, 3000, Vec::new(), SealExtra::HpbTrace(tag));
        assert!(hpb_verify(&fb, &oracle, &cfg, 0));

        // A zero-delay attacker with the wrong identity is rejected even
        // with a legal difficulty and the right trace.
        let wrong = cfg.sealers[(fallback.index() + 1) % 9];
        let bad = build_block(&g, wrong, 1, 3000, Vec::new(), SealExtra::HpbTrace(tag));
        assert!(!hpb_verify(&bad, &oracle, &cfg, 0));
    }

    #[test]
    fn propose_roles_and_self_verify() {
        use rand::SeedableRng;
        let cfg = cfg9();
        let oracle = HardwareOracle::new(11);
        let g = crate::chain::genesis_block();
        let pool = crate::chain::Mempool::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let trace = oracle.sample(1);
        let leader = hpb_in_turn_sealer(1, &oracle, &cfg);
        let fallback = hpb_fallback_sealer(1, trace, &cfg);

        let (b, send_at) = hpb_propose(leader, &pool, &oracle, &cfg, &g, 3000, &mut rng).unwrap();
        assert_eq!(b.difficulty(), 2);
        assert_eq!(send_at, 3000);
        assert!(hpb_verify(&b, &oracle, &cfg, 0));

        if fallback != leader {
            let (b, send_at) =
                hpb_propose(fallback, &pool, &oracle, &cfg, &g, 3000, &mut rng).unwrap();
            assert_eq!(b.difficulty(), 1);
            assert!(send_at >= 3000 && send_at <= 3000 + cfg.wiggle_bound());
            assert!(hpb_verify(&b, &oracle, &cfg, 0));
        }

        let outsider = cfg
            .sealers
            .iter()
            .copied()
            .find(|&s| s != leader && s != fallback)
            .unwrap();
        assert!(hpb_propose(outsider, &pool, &oracle, &cfg, &g, 3000, &mut rng).is_none());
    }

    #[test]
    fn desynchronized_oracle_rejects_everything() {
        let cfg = cfg9();
        let proposer_oracle = HardwareOracle::new(7);
        let verifier_oracle = HardwareOracle::new(8);
        let g = genesis_block();
        // A proposer sampling a different source is rejected for every round
        // sampled: oracle misconfiguration is all-or-nothing.
        for round in 1..32u64 {
            let trace = proposer_oracle.sample(round);
            let leader = hpb_in_turn_sealer(round, &proposer_oracle, &cfg);
            let b = build_block(
                &g,
                leader,
                2,
                3000 * round,
                Vec::new(),
                SealExtra::HpbTrace(trace),
            );
            assert!(!hpb_verify(&b, &verifier_oracle, &cfg, 0));
        }
    }
}
