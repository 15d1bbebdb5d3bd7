//! Command-line front end: single runs, the committee sweeps, figure-panel
//! assembly, and event-log replay.
//!
//! Exit codes: 0 success, 2 configuration error, 3 output error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poa_sim::harness::{
    self, experiment_type1_committee_sweep, experiment_type2, hybrid_config, parse_attack,
    parse_config, parse_consensus, run_one, AttackChoice, ExperimentConfig, FaultPlan, Metrics,
    SweepRow,
};
use poa_sim::netsim::ConsensusKind;

#[derive(Parser)]
#[command(
    name = "poa-sim",
    about = "Deterministic PoA order-manipulation simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration (optionally seed-averaged).
    Run(RunArgs),
    /// Run a predefined experiment family and write its tables.
    Sweep(SweepArgs),
    /// Parse, validate and summarize an exported event log.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key/value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// aura | clique | clique-patched | hpb | vrf
    #[arg(long)]
    consensus: Option<String>,
    /// none | type1 | type2 | hybrid
    #[arg(long)]
    attack: Option<String>,
    #[arg(long)]
    sealers: Option<usize>,
    #[arg(long)]
    minutes: Option<u64>,
    /// Output directory for runs.csv (and events.log when recorded).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// type1-committee | type2-committee | figure3
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    out: PathBuf,
    /// Base seed for every batch.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds per configuration.
    #[arg(long)]
    seeds: Option<u64>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Replay(args) => cmd_replay(args),
    }
}

fn config_from(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg = parse_config(&text, cfg).map_err(|e| e.to_string())?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(c) = &args.consensus {
        cfg.consensus = parse_consensus(c).ok_or_else(|| format!("unknown consensus `{c}`"))?;
    }
    if let Some(a) = &args.attack {
        cfg.attack = parse_attack(a).ok_or_else(|| format!("unknown attack `{a}`"))?;
    }
    if let Some(n) = args.sealers {
        cfg.committee_size = n;
    }
    if let Some(m) = args.minutes {
        cfg.run_ms = m * 60 * 1000;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match config_from(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut all: Vec<Metrics> = Vec::new();
    let mut last_log = Vec::new();
    for k in 0..cfg.seeds {
        let (m, result) = run_one(&cfg, cfg.seed + k);
        println!(
            "seed {}: canonical={} victims(block/tx)={}/{} confirmed_txs={} rate_block={:.4} rate_tx={:.4} stall={}ms",
            m.seed,
            m.canonical_blocks,
            m.victim_blocks,
            m.victim_txs,
            m.confirmed_user_txs,
            m.rate_block,
            m.rate_tx,
            m.stall_ms
        );
        if cfg.record_log {
            last_log = result.log;
        }
        all.push(m);
    }
    let rates: Vec<f64> = all.iter().map(|m| m.rate_tx).collect();
    let (mean, se) = harness::mean_and_stderr(&rates);
    println!("mean rate_tx over {} seed(s): {:.4} (stderr {:.4})", all.len(), mean, se);
    if let Some(dir) = &args.out {
        if let Err(e) = harness::write_runs_csv(&dir.join("runs.csv"), &all) {
            eprintln!("output error: {e}");
            return ExitCode::from(3);
        }
        if cfg.record_log {
            if let Err(e) = harness::write_event_log(&dir.join("events.log"), &last_log) {
                eprintln!("output error: {e}");
                return ExitCode::from(3);
            }
        }
        println!("wrote {}", dir.join("runs.csv").display());
    }
    ExitCode::SUCCESS
}

fn emit_sweep(out: &Path, name: &str, rows: &[SweepRow]) -> Result<(), harness::OutputError> {
    harness::write_sweep_csv(&out.join(format!("{name}.csv")), rows)?;
    let mut metrics: Vec<Metrics> = Vec::new();
    for r in rows {
        metrics.extend(r.runs.iter().cloned());
    }
    harness::write_runs_csv(&out.join(format!("{name}_runs.csv")), &metrics)
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let mut base = ExperimentConfig::default();
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    if let Some(seeds) = args.seeds {
        base.seeds = seeds;
    }
    let out = args.out.as_path();
    let result = match args.experiment.as_str() {
        "type1-committee" => {
            base.tx_rate = 5.0;
            let rows = experiment_type1_committee_sweep(
                &base,
                &[3, 9, 18, 27],
                &[ConsensusKind::Aura, ConsensusKind::Clique],
            );
            print_rows(&rows);
            emit_sweep(out, "type1_committee", &rows)
        }
        "type2-committee" => {
            base.tx_rate = 2.0;
            base.mempool_cap = 20_000;
            let rows = experiment_type2(
                &base,
                &[9, 18, 27, 36],
                &[ConsensusKind::Aura, ConsensusKind::Clique],
                &[AttackChoice::Type2, AttackChoice::Hybrid],
            );
            print_rows(&rows);
            emit_sweep(out, "type2_committee", &rows)
        }
        "figure3" => cmd_figure3(&base, out),
        other => {
            eprintln!("config error: unknown experiment `{other}`");
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("output error: {e}");
            ExitCode::from(3)
        }
    }
}

/// The full panel set: fixed-9 time series for both engines plus the two
/// committee sweeps.
fn cmd_figure3(base: &ExperimentConfig, out: &Path) -> Result<(), harness::OutputError> {
    let mut series_runs: Vec<Metrics> = Vec::new();
    for kind in [ConsensusKind::Aura, ConsensusKind::Clique] {
        // Type-I alone, faultless.
        let mut c1 = base.clone();
        c1.consensus = kind;
        c1.attack = AttackChoice::Type1;
        series_runs.push(run_one(&c1, c1.seed).0);
        // Type-II alone, leader crashed each round.
        let mut c2 = base.clone();
        c2.consensus = kind;
        c2.attack = AttackChoice::Type2;
        c2.faults = FaultPlan::LeaderCrash {
            cadence: 1,
            exempt_attacker: false,
        };
        series_runs.push(run_one(&c2, c2.seed).0);
        // Hybrid with sparse crashes.
        let mut c3 = hybrid_config(base);
        c3.consensus = kind;
        series_runs.push(run_one(&c3, c3.seed).0);
    }

    let mut sweep_base = base.clone();
    sweep_base.tx_rate = 5.0;
    let mut rows = experiment_type1_committee_sweep(
        &sweep_base,
        &[3, 9, 18, 27],
        &[ConsensusKind::Aura, ConsensusKind::Clique],
    );
    let mut t2_base = base.clone();
    t2_base.tx_rate = 2.0;
    t2_base.mempool_cap = 20_000;
    rows.extend(experiment_type2(
        &t2_base,
        &[9, 18, 27, 36],
        &[ConsensusKind::Aura, ConsensusKind::Clique],
        &[AttackChoice::Type2, AttackChoice::Hybrid],
    ));
    print_rows(&rows);

    let series_refs: Vec<&Metrics> = series_runs.iter().collect();
    harness::write_panels(&out.join("figure3_panels.csv"), &series_refs, &rows)?;
    harness::write_runs_csv(&out.join("figure3_series_runs.csv"), &series_runs)?;
    harness::write_sweep_csv(&out.join("figure3_sweeps.csv"), &rows)?;
    println!("wrote {}", out.join("figure3_panels.csv").display());
    Ok(())
}

fn print_rows(rows: &[SweepRow]) {
    for r in rows {
        println!(
            "{:>14} N={:<3} {:>6}: rate_tx={:.4} (se {:.4}) rate_block={:.4} share={:.4}",
            r.consensus.label(),
            r.committee,
            r.attack.label(),
            r.mean_rate_tx,
            r.stderr_rate_tx,
            r.mean_rate_block,
            r.mean_block_share
        );
    }
}

fn cmd_replay(args: ReplayArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.log) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.log.display());
            return ExitCode::from(2);
        }
    };
    match harness::replay_log(&text) {
        Ok(summary) => {
            println!(
                "{} events, {} nodes, t=[{} ms, {} ms]",
                summary.events, summary.nodes, summary.first_ms, summary.last_ms
            );
            for (kind, count) in &summary.per_kind {
                println!("{kind:>20}: {count}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}
