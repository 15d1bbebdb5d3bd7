//! Run configuration and the flat key/value config-file format.
//!
//! A config file is plain text, one `key = value` per line, `#` comments
//! allowed. Keys mirror the experiment parameters; unknown keys are
//! configuration errors.

use thiserror::Error;

use crate::adversary::{AttackConfig, TargetPredicate, Type1Mode};
use crate::chain::{Millis, NodeId};
use crate::netsim::{ConsensusKind, NetParams, SimSetup, Workload};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Which attack flags a run enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttackChoice {
    #[default]
    None,
    Type1,
    Type2,
    Hybrid,
}

impl AttackChoice {
    pub fn label(self) -> &'static str {
        match self {
            AttackChoice::None => "none",
            AttackChoice::Type1 => "type1",
            AttackChoice::Type2 => "type2",
            AttackChoice::Hybrid => "hybrid",
        }
    }
}

/// Leader-crash plans the harness can realize as absolute fault windows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FaultPlan {
    #[default]
    None,
    /// Crash the in-turn sealer of every `cadence`-th height for the first
    /// half of its round. `exempt_attacker` skips rounds led by the
    /// attacker.
    LeaderCrash { cadence: u64, exempt_attacker: bool },
    /// Crash both the in-turn sealer and the expected edge-turn sealer of
    /// one height for `down_ms`.
    StallProbe { height: u64, down_ms: Millis },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub consensus: ConsensusKind,
    pub committee_size: usize,
    pub period_ms: Millis,
    pub tx_rate: f64,
    pub run_ms: Millis,
    pub attack: AttackChoice,
    pub type1_mode: Type1Mode,
    /// Defaults to the last committee index.
    pub attacker_index: Option<usize>,
    pub faults: FaultPlan,
    pub min_delay_ms: Millis,
    pub delta_max_ms: Millis,
    pub seed: u64,
    /// Seed-averaged batch size; runs use seeds `seed..seed + seeds`.
    pub seeds: u64,
    /// Defaults to floor(N/2) + 1.
    pub confirmation_depth: Option<u64>,
    pub aura_votes: bool,
    pub vrf_threshold: Option<f64>,
    pub wiggle_unit_ms: Millis,
    pub mempool_cap: usize,
    pub block_gas_limit: u64,
    pub attacker_empty_blocks: bool,
    pub record_log: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            consensus: ConsensusKind::Clique,
            committee_size: 9,
            period_ms: 3000,
            tx_rate: 10.0,
            run_ms: 40 * 60 * 1000,
            attack: AttackChoice::None,
            type1_mode: Type1Mode::Displacement,
            attacker_index: None,
            faults: FaultPlan::None,
            min_delay_ms: 10,
            delta_max_ms: 200,
            seed: 1,
            seeds: 5,
            confirmation_depth: None,
            aura_votes: true,
            vrf_threshold: None,
            wiggle_unit_ms: 500,
            mempool_cap: 1 << 20,
            block_gas_limit: crate::chain::DEFAULT_BLOCK_GAS_LIMIT,
            attacker_empty_blocks: false,
            record_log: false,
        }
    }
}

impl ExperimentConfig {
    pub fn attacker(&self) -> NodeId {
        let idx = self
            .attacker_index
            .unwrap_or(self.committee_size.saturating_sub(1));
        NodeId(idx as u32)
    }

    pub fn confirmation_depth(&self) -> u64 {
        self.confirmation_depth
            .unwrap_or(self.committee_size as u64 / 2 + 1)
    }

    pub fn attack_config(&self) -> AttackConfig {
        let type1 = match self.attack {
            AttackChoice::Type1 | AttackChoice::Hybrid => self.type1_mode,
            _ => Type1Mode::Off,
        };
        let type2 = matches!(self.attack, AttackChoice::Type2 | AttackChoice::Hybrid);
        AttackConfig {
            attacker: self.attacker(),
            type1,
            type2,
            target: TargetPredicate::GasAboveMedian,
            empty_blocks: self.attacker_empty_blocks,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.committee_size < 1 {
            return Err(ConfigError::Invalid("committee_size must be >= 1".into()));
        }
        if self.run_ms == 0 {
            return Err(ConfigError::Invalid("run length must be > 0".into()));
        }
        if self.period_ms == 0 {
            return Err(ConfigError::Invalid("period_ms must be > 0".into()));
        }
        if self.tx_rate < 0.0 {
            return Err(ConfigError::Invalid("tx_rate must be >= 0".into()));
        }
        if self.min_delay_ms > self.delta_max_ms {
            return Err(ConfigError::Invalid(
                "min_delay_ms must not exceed delta_max_ms".into(),
            ));
        }
        if let Some(idx) = self.attacker_index {
            if idx >= self.committee_size {
                return Err(ConfigError::Invalid("attacker_index out of range".into()));
            }
        }
        if self.seeds == 0 {
            return Err(ConfigError::Invalid("seeds must be >= 1".into()));
        }
        Ok(())
    }

    /// Distilled engine setup for one seed of this experiment.
    pub fn sim_setup(&self, seed: u64) -> SimSetup {
        SimSetup {
            consensus: self.consensus,
            committee: self.committee_size,
            period: self.period_ms,
            seed,
            until: self.run_ms,
            net: NetParams {
                min_delay: self.min_delay_ms,
                delta_max: self.delta_max_ms,
            },
            workload: Workload {
                tx_rate: self.tx_rate,
                gas_price_range: (1, 1000),
            },
            faults: crate::harness::build_fault_schedule(self, seed),
            mute: crate::harness::build_mute_plan(self),
            attack: self.attack_config(),
            aura_votes: self.aura_votes,
            vrf_threshold: self
                .vrf_threshold
                .unwrap_or(2.0 / self.committee_size as f64),
            wiggle_unit: self.wiggle_unit_ms,
            block_gas_limit: self.block_gas_limit,
            mempool_cap: self.mempool_cap,
            record_log: self.record_log,
        }
    }
}

pub fn parse_consensus(s: &str) -> Option<ConsensusKind> {
    match s {
        "aura" => Some(ConsensusKind::Aura),
        "clique" => Some(ConsensusKind::Clique),
        "clique-patched" => Some(ConsensusKind::CliquePatched),
        "hpb" => Some(ConsensusKind::Hpb),
        "vrf" => Some(ConsensusKind::Vrf),
        _ => None,
    }
}

pub fn parse_attack(s: &str) -> Option<AttackChoice> {
    match s {
        "none" => Some(AttackChoice::None),
        "type1" => Some(AttackChoice::Type1),
        "type2" => Some(AttackChoice::Type2),
        "hybrid" => Some(AttackChoice::Hybrid),
        _ => None,
    }
}

fn parse_faults(s: &str) -> Option<FaultPlan> {
    match s {
        "none" => Some(FaultPlan::None),
        "leader-each-round" => Some(FaultPlan::LeaderCrash {
            cadence: 1,
            exempt_attacker: false,
        }),
        "leader-each-round-exempt-attacker" => Some(FaultPlan::LeaderCrash {
            cadence: 1,
            exempt_attacker: true,
        }),
        _ => {
            if let Some(rest) = s.strip_prefix("leader-every-") {
                let cadence: u64 = rest.parse().ok()?;
                if cadence == 0 {
                    return None;
                }
                return Some(FaultPlan::LeaderCrash {
                    cadence,
                    exempt_attacker: true,
                });
            }
            if let Some(rest) = s.strip_prefix("stall-probe-") {
                let height: u64 = rest.parse().ok()?;
                return Some(FaultPlan::StallProbe {
                    height,
                    down_ms: 8000,
                });
            }
            None
        }
    }
}

/// Parse the flat key/value format over the given defaults.
pub fn parse_config(text: &str, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: line.to_string(),
            })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |reason: &str| ConfigError::BadValue {
            line: line_no,
            key: key.to_string(),
            reason: reason.to_string(),
        };
        match key {
            "consensus" => {
                cfg.consensus = parse_consensus(value).ok_or_else(|| bad("unknown consensus"))?
            }
            "committee_size" | "sealers" => {
                cfg.committee_size = value.parse().map_err(|_| bad("not an integer"))?
            }
            "period_ms" => cfg.period_ms = value.parse().map_err(|_| bad("not an integer"))?,
            "tx_rate" => cfg.tx_rate = value.parse().map_err(|_| bad("not a number"))?,
            "run_ms" => cfg.run_ms = value.parse().map_err(|_| bad("not an integer"))?,
            "run_minutes" | "minutes" => {
                let m: u64 = value.parse().map_err(|_| bad("not an integer"))?;
                cfg.run_ms = m * 60 * 1000;
            }
            "attack" => cfg.attack = parse_attack(value).ok_or_else(|| bad("unknown attack"))?,
            "type1_mode" => {
                cfg.type1_mode = match value {
                    "displacement" => Type1Mode::Displacement,
                    "insertion" => Type1Mode::Insertion,
                    _ => return Err(bad("displacement or insertion")),
                }
            }
            "attacker_index" => {
                cfg.attacker_index = Some(value.parse().map_err(|_| bad("not an integer"))?)
            }
            "faults" => cfg.faults = parse_faults(value).ok_or_else(|| bad("unknown fault plan"))?,
            "min_delay_ms" => {
                cfg.min_delay_ms = value.parse().map_err(|_| bad("not an integer"))?
            }
            "delta_max_ms" => {
                cfg.delta_max_ms = value.parse().map_err(|_| bad("not an integer"))?
            }
            "seed" => cfg.seed = value.parse().map_err(|_| bad("not an integer"))?,
            "seeds" => cfg.seeds = value.parse().map_err(|_| bad("not an integer"))?,
            "confirmation_depth" => {
                cfg.confirmation_depth = Some(value.parse().map_err(|_| bad("not an integer"))?)
            }
            "aura_votes" => {
                cfg.aura_votes = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(bad("on or off")),
                }
            }
            "vrf_threshold" => {
                cfg.vrf_threshold = Some(value.parse().map_err(|_| bad("not a number"))?)
            }
            "wiggle_unit_ms" => {
                cfg.wiggle_unit_ms = value.parse().map_err(|_| bad("not an integer"))?
            }
            "mempool_cap" => cfg.mempool_cap = value.parse().map_err(|_| bad("not an integer"))?,
            "block_gas_limit" => {
                cfg.block_gas_limit = value.parse().map_err(|_| bad("not an integer"))?
            }
            "attacker_empty_blocks" => {
                cfg.attacker_empty_blocks = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(bad("on or off")),
                }
            }
            "record_log" => {
                cfg.record_log = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(bad("on or off")),
                }
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_key_values() {
        let text = "\
# experiment
consensus = clique
committee_size = 18
tx_rate = 5
minutes = 10
attack = hybrid
faults = leader-every-12
seed = 42
";
        let cfg = parse_config(text, ExperimentConfig::default()).unwrap();
        assert_eq!(cfg.consensus, ConsensusKind::Clique);
        assert_eq!(cfg.committee_size, 18);
        assert_eq!(cfg.run_ms, 600_000);
        assert_eq!(cfg.attack, AttackChoice::Hybrid);
        assert_eq!(
            cfg.faults,
            FaultPlan::LeaderCrash {
                cadence: 12,
                exempt_attacker: true
            }
        );
        assert_eq!(cfg.seed, 42);
        // defaults survive
        assert_eq!(cfg.period_ms, 3000);
        assert_eq!(cfg.confirmation_depth(), 10);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            parse_config("bogus = 1", ExperimentConfig::default()),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_config("committee_size = many", ExperimentConfig::default()),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            parse_config("just-a-line", ExperimentConfig::default()),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            parse_config("committee_size = 0", ExperimentConfig::default()),
            Err(ConfigError::Invalid(_))
        ));
    }
}
