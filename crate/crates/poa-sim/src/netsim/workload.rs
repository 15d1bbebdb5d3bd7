//! Transaction workload: per node, injection events at deterministic
//! intervals of `1000 / tx_rate` ms with seeded within-interval jitter, gas
//! prices drawn from a seeded distribution.

use rand::Rng;

use crate::chain::{Millis, NodeId};

use super::event::{EventKind, EventQueue};
use super::rng::derive_stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workload {
    /// Transactions per second per node.
    pub tx_rate: f64,
    /// Uniform gas-price range, inclusive.
    pub gas_price_range: (u64, u64),
}

impl Default for Workload {
    fn default() -> Self {
        Workload {
            tx_rate: 10.0,
            gas_price_range: (1, 1000),
        }
    }
}

impl Workload {
    /// Pre-schedule every injection below `until`. Returns the number of
    /// scheduled injections.
    pub fn schedule(
        &self,
        nodes: usize,
        until: Millis,
        master: u64,
        queue: &mut EventQueue,
    ) -> u64 {
        if self.tx_rate <= 0.0 {
            return 0;
        }
        let interval_ms = 1000.0 / self.tx_rate;
        let mut count = 0;
        for node in 0..nodes {
            let node = NodeId(node as u32);
            let mut rng = derive_stream(master, "workload", node.0 as u64, 0);
            let mut seq = 0u64;
            loop {
                let base = (seq as f64 * interval_ms).floor() as Millis;
                if base >= until {
                    break;
                }
                let jitter = rng.gen_range(0.0..interval_ms) as Millis;
                let at = (base + jitter).min(until.saturating_sub(1));
                let (lo, hi) = self.gas_price_range;
                let gas_price = rng.gen_range(lo..=hi.max(lo));
                queue.push(at, node, EventKind::InjectTx { seq, gas_price });
                seq += 1;
                count += 1;
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_injection_count() {
        // 10 tx/s per node, 9 nodes, 60 s window: 5400 injections.
        let w = Workload {
            tx_rate: 10.0,
            gas_price_range: (1, 1000),
        };
        let mut q = EventQueue::default();
        let n = w.schedule(9, 60_000, 7, &mut q);
        assert_eq!(n, 5400);
        assert_eq!(q.len(), 5400);
        while let Some(e) = q.pop() {
            assert!(e.at < 60_000);
        }
    }

    #[test]
    fn zero_rate_schedules_nothing() {
        let w = Workload {
            tx_rate: 0.0,
            gas_price_range: (1, 1000),
        };
        let mut q = EventQueue::default();
        assert_eq!(w.schedule(9, 60_000, 7, &mut q), 0);
    }
}
