//! Identity-checked Clique verification. On top of the stock checks, a
//! difficulty-1 block must come from the expected next edge-turn sealer for
//! its height: the eligible sealer closest after the in-turn index in
//! rotation order. Strictly stronger than the stock rule, and the cheapest
//! fix to turn frontrunning — at the price of availability when the one
//! designated edge-turn sealer is down too.

use crate::chain::{Block, Millis, NodeId};
use crate::clique::{clique_verify, in_turn_sealer, sign_recently, CliqueConfig, RecentSigners};

/// The designated fallback proposer for `next_number` when the leader is
/// absent: walk the rotation order starting just after the in-turn index and
/// return the first sealer outside the recently-signed window.
pub fn expected_edge_turn(
    next_number: u64,
    window: &RecentSigners,
    cfg: &CliqueConfig,
) -> Option<NodeId> {
    let n = cfg.sealers.len();
    let in_turn = in_turn_sealer(next_number, cfg);
    for offset in 1..n {
        let candidate = cfg.sealers[(in_turn.index() + offset) % n];
        if !sign_recently(candidate, next_number, window, cfg) {
            return Some(candidate);
        }
    }
    None
}

/// All stock Clique checks plus the edge-turn identity check.
pub fn clique_verify_patched(
    block: &Block,
    cfg: &CliqueConfig,
    window: &RecentSigners,
    parent_timestamp: Millis,
) -> bool {
    if !clique_verify(block, cfg, window, parent_timestamp) {
        return false;
    }
    if block.difficulty() == 1 {
        return expected_edge_turn(block.number(), window, cfg) == Some(block.sealer());
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_block, genesis_block, SealExtra};

    fn cfg9() -> CliqueConfig {
        CliqueConfig::new(3000, 9)
    }

    fn window_of(entries: &[(u64, u32)], cfg: &CliqueConfig) -> RecentSigners {
        let mut w = RecentSigners::default();
        for &(h, s) in entries {
            w.apply(h, NodeId(s), cfg);
        }
        w
    }

    #[test]
    fn expected_edge_is_closest_eligible_after_in_turn() {
        let cfg = cfg9();
        // Height 9: in-turn sealers[0]. Recent: sealers of 4..8 = {4,5,6,7,8}.
        let w = window_of(&[(4, 4), (5, 5), (6, 6), (7, 7), (8, 8)], &cfg);
        // Walking 1,2,3,... from index 0: sealer 1 is eligible.
        assert_eq!(expected_edge_turn(9, &w, &cfg), Some(NodeId(1)));

        // With 1 recently signed instead, the walk skips to 2.
        let w = window_of(&[(4, 1), (5, 5), (6, 6), (7, 7), (8, 8)], &cfg);
        assert_eq!(expected_edge_turn(9, &w, &cfg), Some(NodeId(2)));
    }

    #[test]
    fn patched_rejects_wrong_edge_position() {
        let cfg = cfg9();
        let g = genesis_block();
        let w = RecentSigners::default();
        // Height 1: in-turn sealers[1]; expected edge is sealers[2].
        let expected = expected_edge_turn(1, &w, &cfg).unwrap();
        assert_eq!(expected, NodeId(2));

        // An attacker at the wrong edge position fails the patched check
        // while still passing the stock one.
        let wrong = build_block(&g, NodeId(7), 1, 3000, Vec::new(), SealExtra::None);
        assert!(clique_verify(&wrong, &cfg, &w, 0));
        assert!(!clique_verify_patched(&wrong, &cfg, &w, 0));

        // The correct edge-turn sealer's block passes.
        let right = build_block(&g, NodeId(2), 1, 3000, Vec::new(), SealExtra::None);
        assert!(clique_verify_patched(&right, &cfg, &w, 0));
    }

    #[test]
    fn patched_implies_stock_verify() {
        let cfg = cfg9();
        let g = genesis_block();
        let w = RecentSigners::default();
        // The patch only strengthens: anything passing patched passes stock.
        for s in 0..9u32 {
            for diff in [1u64, 2] {
                let b = build_block(&g, NodeId(s), diff, 3000, Vec::new(), SealExtra::None);
                if clique_verify_patched(&b, &cfg, &w, 0) {
                    assert!(clique_verify(&b, &cfg, &w, 0));
                }
            }
        }
    }
}
