//! Partially synchronous network: every message is delivered within the
//! bound `delta_max`, with per-link delays drawn uniformly from
//! `[min_delay, delta_max]` out of seeded per-link streams. Gossip is
//! single-hop full broadcast over a complete graph.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::chain::{Millis, NodeId};

use super::rng::derive_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetParams {
    pub min_delay: Millis,
    pub delta_max: Millis,
}

impl Default for NetParams {
    fn default() -> Self {
        // The weakest model satisfying the partial-synchrony assumption:
        // uniform bounded delay with delta = 200 ms.
        NetParams {
            min_delay: 10,
            delta_max: 200,
        }
    }
}

#[derive(Debug)]
pub struct NetworkModel {
    params: NetParams,
    master: u64,
    links: HashMap<(NodeId, NodeId), ChaCha8Rng>,
}

impl NetworkModel {
    pub fn new(params: NetParams, master: u64) -> Self {
        NetworkModel {
            params,
            master,
            links: HashMap::new(),
        }
    }

    pub fn params(&self) -> NetParams {
        self.params
    }

    /// Per-message delay on the (from, to) link. Always <= delta_max.
    pub fn sample_delay(&mut self, from: NodeId, to: NodeId) -> Millis {
        let lo = self.params.min_delay.min(self.params.delta_max);
        let hi = self.params.delta_max;
        if lo == hi {
            return hi;
        }
        let master = self.master;
        let rng = self
            .links
            .entry((from, to))
            .or_insert_with(|| derive_stream(master, "link", from.0 as u64, to.0 as u64));
        rng.gen_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delays_respect_bounds_over_many_samples() {
        let mut net = NetworkModel::new(NetParams::default(), 99);
        let mut max_seen = 0;
        let mut min_seen = u64::MAX;
        for i in 0..100_000u64 {
            let from = NodeId((i % 9) as u32);
            let to = NodeId(((i / 9) % 9) as u32);
            if from == to {
                continue;
            }
            let d = net.sample_delay(from, to);
            max_seen = max_seen.max(d);
            min_seen = min_seen.min(d);
        }
        assert!(max_seen <= 200);
        assert!(min_seen >= 10);
        assert!(max_seen > 150, "spread check: {max_seen}");
        assert!(min_seen < 50, "spread check: {min_seen}");
    }

    #[test]
    fn zero_delta_is_instantaneous() {
        let mut net = NetworkModel::new(
            NetParams {
                min_delay: 0,
                delta_max: 0,
            },
            1,
        );
        for _ in 0..100 {
            assert_eq!(net.sample_delay(NodeId(0), NodeId(1)), 0);
        }
    }
}
