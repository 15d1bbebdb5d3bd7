//! Victim counting and per-run metrics.
//!
//! A victim transaction is a confirmed user transaction with an attacker
//! front-transaction at a strictly smaller index in the same block (wrapped
//! victims included). A victim block is a canonical difficulty-1 block the
//! attacker captured out of its proper turn while zero-delay frontrunning
//! was active: under plain Clique every such block counts (no rule binds
//! the difficulty-1 identity, so each capture frontruns whoever would have
//! won the wiggle race); under identity-checked regimes a block that passed
//! verification is the designated proposer's proper turn and not a victim.
//!
//! Denominators: the transaction success rate divides by confirmed user
//! transactions; the block success rate divides by the heights the attacker
//! actually contested (an edge-turn race with no difficulty-2 winner that
//! the attacker entered with a zero-delay block). The attacker's share of
//! all canonical blocks is carried separately for the hybrid decomposition.

use std::collections::HashSet;

use crate::chain::{Millis, NodeId, TxKind};
use crate::clique::{CliqueConfig, RecentSigners};
use crate::netsim::{ConsensusKind, SimResult};
use crate::remedies::{hpb_fallback_sealer, hpb_in_turn_sealer, HardwareOracle};

use super::config::ExperimentConfig;

/// Cumulative per-bucket series point for the figure panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub bucket_end_ms: Millis,
    pub cum_blocks: u64,
    pub cum_victim_blocks: u64,
    pub cum_user_txs: u64,
    pub cum_victim_txs: u64,
}

/// Two-minute buckets for the time-series panels.
pub const SERIES_BUCKET_MS: Millis = 120_000;

#[derive(Debug, Clone)]
pub struct Metrics {
    pub consensus: ConsensusKind,
    pub committee: usize,
    pub seed: u64,
    pub attack_label: &'static str,
    /// Blocks sealed and broadcast run-wide, rejected attempts included.
    pub total_blocks: u64,
    /// Canonical chain length at the observer, genesis excluded.
    pub canonical_blocks: u64,
    /// Canonical blocks at least `confirmation_depth` behind the tip.
    pub confirmed_blocks: u64,
    pub victim_blocks: u64,
    pub confirmed_user_txs: u64,
    pub victim_txs: u64,
    /// Confirmed canonical blocks sealed by the attacker (any difficulty).
    pub attacker_sealed_blocks: u64,
    pub per_sealer_confirmed: Vec<u64>,
    /// Confirmed heights whose in-turn sealer was scheduled to sleep (or
    /// crashed) at its scheduled seal time.
    pub leader_crashed_heights: u64,
    /// Confirmed heights decided by an edge-turn race the attacker entered.
    pub attacker_contested_heights: u64,
    /// Contested heights the attacker actually captured.
    pub attacker_contested_wins: u64,
    /// victim_txs / confirmed_user_txs.
    pub rate_tx: f64,
    /// victim_blocks / attacker_contested_heights.
    pub rate_block: f64,
    /// victim_blocks / canonical_blocks.
    pub attacker_block_share: f64,
    /// Sum of positive timestamp slack over the confirmed chain.
    pub stall_ms: Millis,
    pub injected_txs: u64,
    pub verify_calls: u64,
    pub series: Vec<SeriesPoint>,
}

impl Metrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{}",
            self.consensus.label(),
            self.committee,
            self.seed,
            self.attack_label,
            self.canonical_blocks,
            self.victim_blocks,
            self.confirmed_user_txs,
            self.victim_txs,
            self.rate_block,
            self.rate_tx,
            self.stall_ms
        )
    }
}

pub const CSV_HEADER: &str = "consensus,committee,seed,attack,canonical_blocks,victim_blocks,confirmed_txs,victim_txs,rate_block,rate_tx,stall_ms";

/// The node whose final chain is measured: the lowest-indexed benign node.
pub fn observer_index(cfg: &ExperimentConfig) -> usize {
    if cfg.attacker().index() == 0 && cfg.committee_size > 1 {
        1
    } else {
        0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Compute metrics from a finished run, measured on the observer's chain.
pub fn count_victims(cfg: &ExperimentConfig, seed: u64, result: &SimResult) -> Metrics {
    let attack = cfg.attack_config();
    let attacker = attack.attacker;
    let store = &result.stores[observer_index(cfg)];
    let depth = cfg.confirmation_depth();
    let n = cfg.committee_size;

    let clique_cfg = CliqueConfig {
        sealers: (0..n as u32).map(NodeId).collect(),
        period: cfg.period_ms,
        wiggle_unit: cfg.wiggle_unit_ms,
    };
    let oracle = crate::netsim::oracle_for_run(seed);
    let faults = super::build_fault_schedule(cfg, seed);

    let canonical = store.canonical_chain();
    let canonical_blocks = canonical.len() as u64 - 1;
    let confirmed = store.confirmed_blocks(depth);

    let mut m = Metrics {
        consensus: cfg.consensus,
        committee: n,
        seed,
        attack_label: cfg.attack.label(),
        total_blocks: result.counters.sealed_total,
        canonical_blocks,
        confirmed_blocks: confirmed.len().saturating_sub(1) as u64,
        victim_blocks: 0,
        confirmed_user_txs: 0,
        victim_txs: 0,
        attacker_sealed_blocks: 0,
        per_sealer_confirmed: vec![0; n],
        leader_crashed_heights: 0,
        attacker_contested_heights: 0,
        attacker_contested_wins: 0,
        rate_tx: 0.0,
        rate_block: 0.0,
        attacker_block_share: 0.0,
        stall_ms: 0,
        injected_txs: result.counters.injected_txs,
        verify_calls: result.counters.verify_calls,
        series: Vec::new(),
    };

    let attempted_heights: HashSet<u64> = result
        .counters
        .attacker_attempt_heights
        .iter()
        .copied()
        .collect();
    let mut seen_tx_ids = HashSet::new();
    let mut window = RecentSigners::default();
    let mut series: Vec<SeriesPoint> = Vec::new();
    let mut cum = SeriesPoint {
        bucket_end_ms: SERIES_BUCKET_MS,
        cum_blocks: 0,
        cum_victim_blocks: 0,
        cum_user_txs: 0,
        cum_victim_txs: 0,
    };

    let mut prev_ts: Millis = 0;
    for block in confirmed.iter().filter(|b| b.number() > 0) {
        let h = block.number();
        let sealer = block.sealer();
        m.per_sealer_confirmed[sealer.index()] += 1;
        if sealer == attacker {
            m.attacker_sealed_blocks += 1;
        }

        // Timestamp slack beyond one period = stall at this height.
        m.stall_ms += block.timestamp().saturating_sub(prev_ts + cfg.period_ms);

        // Was the in-turn sealer scheduled to sleep through this height?
        let in_turn = in_turn_of(cfg.consensus, h, &oracle, &clique_cfg);
        let scheduled = prev_ts + cfg.period_ms;
        let muted = match cfg.faults {
            super::FaultPlan::LeaderCrash {
                cadence,
                exempt_attacker,
            } => h.is_multiple_of(cadence.max(1)) && !(exempt_attacker && in_turn == attacker),
            _ => false,
        };
        if muted || faults.down_at(in_turn, scheduled) {
            m.leader_crashed_heights += 1;
        }
        // A height is contested when it actually came down to an edge-turn
        // race the attacker entered: no difficulty-2 block won it, and the
        // attacker sealed a zero-delay block for it (on some branch).
        // Heights where the attacker's own recently-signed state keeps it
        // out are nobody's race, and against a live leader there is nothing
        // to frontrun.
        let attacker_contests = attack.type2
            && block.difficulty() == 1
            && attempted_heights.contains(&h)
            && supports_edge_blocks(cfg.consensus);
        if attacker_contests {
            m.attacker_contested_heights += 1;
            if sealer == attacker {
                m.attacker_contested_wins += 1;
            }
        }

        // Victim block: an out-of-turn capture the verification regime did
        // not identity-bind.
        let is_victim_block = attack.type2
            && sealer == attacker
            && block.difficulty() == 1
            && !identity_bound(cfg.consensus, h, attacker, &window, &oracle, &clique_cfg);
        if is_victim_block {
            m.victim_blocks += 1;
        }

        // Victim transactions: user txs behind an attacker front tx.
        let mut seen_front = false;
        let mut block_user = 0;
        let mut block_victims = 0;
        for tx in &block.txs {
            assert!(
                seen_tx_ids.insert(tx.id),
                "transaction id repeated on the confirmed canonical chain"
            );
            match tx.kind {
                TxKind::AttackerFront => seen_front = true,
                TxKind::AttackerBack => {}
                TxKind::User => {
                    block_user += 1;
                    if seen_front {
                        block_victims += 1;
                    }
                }
            }
        }
        m.confirmed_user_txs += block_user;
        m.victim_txs += block_victims;

        // Series buckets keyed by block timestamp.
        while block.timestamp() >= cum.bucket_end_ms {
            series.push(cum);
            cum.bucket_end_ms += SERIES_BUCKET_MS;
        }
        cum.cum_blocks += 1;
        cum.cum_user_txs += block_user;
        cum.cum_victim_txs += block_victims;
        if is_victim_block {
            cum.cum_victim_blocks += 1;
        }

        window.apply(h, sealer, &clique_cfg);
        prev_ts = block.timestamp();
    }
    series.push(cum);
    m.series = series;

    m.rate_tx = ratio(m.victim_txs, m.confirmed_user_txs);
    m.rate_block = ratio(m.victim_blocks, m.attacker_contested_heights);
    m.attacker_block_share = ratio(m.victim_blocks, m.canonical_blocks);

    // Spec invariants on the metric fields themselves.
    assert!(m.victim_txs <= m.confirmed_user_txs);
    assert!(m.victim_blocks <= m.canonical_blocks);
    assert!((0.0..=1.0).contains(&m.rate_tx));
    assert!((0.0..=1.0).contains(&m.rate_block));
    m
}

/// In-turn sealer of a height under each regime's selection rule.
fn in_turn_of(
    kind: ConsensusKind,
    height: u64,
    oracle: &HardwareOracle,
    cfg: &CliqueConfig,
) -> NodeId {
    match kind {
        ConsensusKind::Hpb => hpb_in_turn_sealer(height, oracle, cfg),
        _ => cfg.sealers[(height % cfg.sealers.len() as u64) as usize],
    }
}

/// Does the regime let non-leader sealers produce accepted blocks at all?
fn supports_edge_blocks(kind: ConsensusKind) -> bool {
    !matches!(kind, ConsensusKind::Aura | ConsensusKind::Vrf)
}

/// Was this difficulty-1 block's sealer the identity the active regime
/// designates for the height? Plain Clique designates nobody (that is the
/// verification gap), so captures there are never identity-bound.
fn identity_bound(
    kind: ConsensusKind,
    height: u64,
    sealer: NodeId,
    window: &RecentSigners,
    oracle: &HardwareOracle,
    cfg: &CliqueConfig,
) -> bool {
    match kind {
        ConsensusKind::Clique => false,
        ConsensusKind::CliquePatched => {
            crate::remedies::expected_edge_turn(height, window, cfg) == Some(sealer)
        }
        ConsensusKind::Hpb => hpb_fallback_sealer(height, oracle.sample(height), cfg) == sealer,
        // Aura and VRF admit no out-of-turn difficulty-1 blocks at all; a
        // canonical one would be a verification failure, not a proper turn.
        ConsensusKind::Aura | ConsensusKind::Vrf => false,
    }
}

/// Mean, and the standard error of the mean, over per-seed rates.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_stderr_shrinks_with_sqrt_k() {
        // The estimator itself: stderr of the mean is sd/sqrt(k).
        let vals = [0.10, 0.12, 0.11, 0.09, 0.13];
        let (mean, se) = mean_and_stderr(&vals);
        assert!((mean - 0.11).abs() < 1e-9);
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((se - sd / 5f64.sqrt()).abs() < 1e-12);
    }
}
