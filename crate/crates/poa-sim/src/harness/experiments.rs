//! Experiment drivers: single runs, seed-averaged batches, the two
//! committee sweeps from the evaluation, and the figure panel assembly.

use rayon::prelude::*;

use crate::chain::NodeId;
use crate::clique::{CliqueConfig, RecentSigners};
use crate::netsim::{self, ConsensusKind, FaultSchedule, MutePlan, SimResult};
use crate::remedies::expected_edge_turn;

use super::config::{AttackChoice, ExperimentConfig, FaultPlan};
use super::metrics::{count_victims, mean_and_stderr, Metrics};

/// Crash windows for fault plans that model real process crashes. The
/// per-round leader-sleep protocol is realized as a mining mute instead
/// (see [`build_mute_plan`]): the sleeping client stops sealing for its
/// turn but keeps its chain synced, which also keeps the schedule aligned
/// with the chain if timestamps ever drift off the nominal grid.
pub fn build_fault_schedule(cfg: &ExperimentConfig, _seed: u64) -> FaultSchedule {
    let n = cfg.committee_size as u64;
    let mut schedule = FaultSchedule::none();
    if let FaultPlan::StallProbe { height, down_ms } = cfg.faults {
        let scheduled = height * cfg.period_ms;
        let leader = NodeId((height % n) as u32);
        let crash_at = scheduled.saturating_sub(25);
        schedule.push(leader, crash_at, Some(scheduled + down_ms));
        if let Some(edge) = nominal_expected_edge(cfg, height) {
            if edge != leader {
                schedule.push(edge, crash_at, Some(scheduled + down_ms));
            }
        }
    }
    schedule
}

/// Mining-mute realization of the leader-sleep plans.
pub fn build_mute_plan(cfg: &ExperimentConfig) -> MutePlan {
    match cfg.faults {
        FaultPlan::LeaderCrash {
            cadence,
            exempt_attacker,
        } => MutePlan::Leaders {
            cadence,
            exempt: exempt_attacker.then(|| cfg.attacker()),
        },
        _ => MutePlan::None,
    }
}

fn clique_cfg_of(cfg: &ExperimentConfig) -> CliqueConfig {
    CliqueConfig {
        sealers: (0..cfg.committee_size as u32).map(NodeId).collect(),
        period: cfg.period_ms,
        wiggle_unit: cfg.wiggle_unit_ms,
    }
}

/// Expected edge-turn sealer of `height` assuming a faultless round-robin
/// prefix (used to aim the availability probe).
pub fn nominal_expected_edge(cfg: &ExperimentConfig, height: u64) -> Option<NodeId> {
    let clique = clique_cfg_of(cfg);
    let mut window = RecentSigners::default();
    let w = clique.window();
    let from = height.saturating_sub(w).max(1);
    for j in from..height {
        window.apply(j, NodeId((j % cfg.committee_size as u64) as u32), &clique);
    }
    expected_edge_turn(height, &window, &clique)
}

/// Execute one seed of an experiment and reduce it to metrics.
pub fn run_one(cfg: &ExperimentConfig, seed: u64) -> (Metrics, SimResult) {
    let setup = cfg.sim_setup(seed);
    let result = netsim::run(&setup);
    let metrics = count_victims(cfg, seed, &result);
    (metrics, result)
}

/// Seed-averaged batch over `cfg.seeds` consecutive seeds, in parallel;
/// results ordered by seed.
pub fn run_batch(cfg: &ExperimentConfig) -> Vec<Metrics> {
    let seeds: Vec<u64> = (0..cfg.seeds).map(|k| cfg.seed + k).collect();
    seeds
        .par_iter()
        .map(|&s| run_one(cfg, s).0)
        .collect()
}

/// One sweep row: per committee size and consensus, the seed-averaged
/// success rates.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub consensus: ConsensusKind,
    pub committee: usize,
    pub attack: AttackChoice,
    pub mean_rate_tx: f64,
    pub stderr_rate_tx: f64,
    pub mean_rate_block: f64,
    pub mean_block_share: f64,
    pub runs: Vec<Metrics>,
}

fn sweep_rows(configs: Vec<ExperimentConfig>) -> Vec<SweepRow> {
    // Flatten (config, seed) pairs so small committees do not serialize
    // behind large ones.
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, cfg)| (0..cfg.seeds).map(move |k| (i, cfg.seed + k)))
        .collect();
    let mut results: Vec<(usize, Metrics)> = jobs
        .par_iter()
        .map(|&(i, seed)| (i, run_one(&configs[i], seed).0))
        .collect();
    results.sort_by_key(|(i, m)| (*i, m.seed));

    configs
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let runs: Vec<Metrics> = results
                .iter()
                .filter(|(j, _)| *j == i)
                .map(|(_, m)| m.clone())
                .collect();
            let rates: Vec<f64> = runs.iter().map(|m| m.rate_tx).collect();
            let (mean, se) = mean_and_stderr(&rates);
            let blocks: Vec<f64> = runs.iter().map(|m| m.rate_block).collect();
            let shares: Vec<f64> = runs.iter().map(|m| m.attacker_block_share).collect();
            SweepRow {
                consensus: cfg.consensus,
                committee: cfg.committee_size,
                attack: cfg.attack,
                mean_rate_tx: mean,
                stderr_rate_tx: se,
                mean_rate_block: mean_and_stderr(&blocks).0,
                mean_block_share: mean_and_stderr(&shares).0,
                runs,
            }
        })
        .collect()
}

/// Type-I committee sweep: faultless runs, ordering manipulation only,
/// success_rate_tx per size (expected to track 1/N).
pub fn experiment_type1_committee_sweep(
    base: &ExperimentConfig,
    sizes: &[usize],
    consensus: &[ConsensusKind],
) -> Vec<SweepRow> {
    let mut configs = Vec::new();
    for &kind in consensus {
        for &n in sizes {
            let mut cfg = base.clone();
            cfg.consensus = kind;
            cfg.committee_size = n;
            cfg.attack = AttackChoice::Type1;
            cfg.faults = FaultPlan::None;
            cfg.attacker_index = None;
            configs.push(cfg);
        }
    }
    sweep_rows(configs)
}

/// Type-II committee sweep: the in-turn sealer of every round sleeps; per
/// size and consensus variant, Type-II alone and the hybrid.
pub fn experiment_type2(
    base: &ExperimentConfig,
    sizes: &[usize],
    consensus: &[ConsensusKind],
    attacks: &[AttackChoice],
) -> Vec<SweepRow> {
    let mut configs = Vec::new();
    for &kind in consensus {
        for &n in sizes {
            for &attack in attacks {
                let mut cfg = base.clone();
                cfg.consensus = kind;
                cfg.committee_size = n;
                cfg.attack = attack;
                cfg.faults = FaultPlan::LeaderCrash {
                    cadence: 1,
                    exempt_attacker: false,
                };
                cfg.attacker_index = None;
                configs.push(cfg);
            }
        }
    }
    sweep_rows(configs)
}

/// The hybrid configuration used for the additive-relation measurement:
/// sparse leader crashes (every 18th height, never the attacker's own
/// turn) so the attacker's legal turns and its captures are both present.
pub fn hybrid_config(base: &ExperimentConfig) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.consensus = ConsensusKind::Clique;
    cfg.attack = AttackChoice::Hybrid;
    cfg.faults = FaultPlan::LeaderCrash {
        cadence: 18,
        exempt_attacker: true,
    };
    cfg
}

/// Convenience wrapper: seed-averaged mean of a metric accessor.
pub fn mean_of(runs: &[Metrics], f: impl Fn(&Metrics) -> f64) -> f64 {
    let vals: Vec<f64> = runs.iter().map(f).collect();
    mean_and_stderr(&vals).0
}

/// Simulated-to-wall speed probe: a 40-simulated-minute default run must be
/// far faster than real time.
pub fn wall_clock_of(cfg: &ExperimentConfig, seed: u64) -> (Metrics, std::time::Duration) {
    let start = std::time::Instant::now();
    let (m, _) = run_one(cfg, seed);
    (m, start.elapsed())
}
