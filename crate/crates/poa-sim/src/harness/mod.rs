//! Experiment runner and metrics: run configuration, victim counting,
//! committee sweeps, and CSV/plot-panel output.

mod config;
mod experiments;
mod metrics;
mod output;
mod replay;

pub use config::{
    parse_attack, parse_config, parse_consensus, AttackChoice, ConfigError, ExperimentConfig,
    FaultPlan,
};
pub use experiments::{
    build_fault_schedule, build_mute_plan, experiment_type1_committee_sweep, experiment_type2,
    hybrid_config, mean_of, nominal_expected_edge, run_batch, run_one, wall_clock_of, SweepRow,
};
pub use metrics::{
    count_victims, mean_and_stderr, observer_index, Metrics, SeriesPoint, CSV_HEADER,
    SERIES_BUCKET_MS,
};
pub use output::{write_event_log, write_panels, write_runs_csv, write_sweep_csv, OutputError};
pub use replay::{replay_log, ReplayError, ReplaySummary};
