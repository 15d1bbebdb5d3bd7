//! Result files: per-experiment CSV, the eight figure panels as plot data,
//! and the event-log export. All rows are sorted before writing so equal
//! seeds reproduce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::netsim::{ConsensusKind, LogRecord};

use super::experiments::SweepRow;
use super::metrics::{Metrics, CSV_HEADER};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| OutputError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    let mut f = fs::File::create(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(contents.as_bytes())
        .map_err(|source| OutputError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Per-run rows under the fixed schema, sorted by
/// (consensus, committee, attack, seed).
pub fn write_runs_csv(path: &Path, metrics: &[Metrics]) -> Result<(), OutputError> {
    let mut rows: Vec<&Metrics> = metrics.iter().collect();
    rows.sort_by_key(|m| {
        (
            m.consensus.label(),
            m.committee,
            m.attack_label,
            m.seed,
        )
    });
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in rows {
        out.push_str(&m.csv_row());
        out.push('\n');
    }
    write_file(path, &out)
}

/// The eight panels: per consensus {aura, clique}, victim counts and rates
/// against cumulative totals (two-minute buckets, committee fixed) and
/// against committee size. Rows sorted by (panel, x, series).
pub fn write_panels(
    path: &Path,
    time_series: &[&Metrics],
    sweep: &[SweepRow],
) -> Result<(), OutputError> {
    let mut rows: Vec<(String, f64, String, f64)> = Vec::new();

    let panel_letter = |kind: ConsensusKind, which: &str| -> Option<&'static str> {
        match (kind, which) {
            (ConsensusKind::Aura, "counts-vs-total") => Some("a"),
            (ConsensusKind::Aura, "rates-vs-total") => Some("b"),
            (ConsensusKind::Clique, "counts-vs-total") => Some("c"),
            (ConsensusKind::Clique, "rates-vs-total") => Some("d"),
            (ConsensusKind::Aura, "counts-vs-size") => Some("e"),
            (ConsensusKind::Aura, "rates-vs-size") => Some("f"),
            (ConsensusKind::Clique, "counts-vs-size") => Some("g"),
            (ConsensusKind::Clique, "rates-vs-size") => Some("h"),
            _ => None,
        }
    };

    for m in time_series {
        let (Some(counts_panel), Some(rates_panel)) = (
            panel_letter(m.consensus, "counts-vs-total"),
            panel_letter(m.consensus, "rates-vs-total"),
        ) else {
            continue;
        };
        let tag = m.attack_label;
        for p in &m.series {
            // Upper sub-figures plot transactions, lower ones blocks; both
            // land in the same panel with distinct series names.
            rows.push((
                counts_panel.to_string(),
                p.cum_user_txs as f64,
                format!("victim_txs_{tag}_seed{}", m.seed),
                p.cum_victim_txs as f64,
            ));
            rows.push((
                counts_panel.to_string(),
                p.cum_blocks as f64,
                format!("victim_blocks_{tag}_seed{}", m.seed),
                p.cum_victim_blocks as f64,
            ));
            if p.cum_user_txs > 0 {
                rows.push((
                    rates_panel.to_string(),
                    p.cum_user_txs as f64,
                    format!("rate_tx_{tag}_seed{}", m.seed),
                    p.cum_victim_txs as f64 / p.cum_user_txs as f64,
                ));
            }
            if p.cum_blocks > 0 {
                rows.push((
                    rates_panel.to_string(),
                    p.cum_blocks as f64,
                    format!("rate_block_{tag}_seed{}", m.seed),
                    p.cum_victim_blocks as f64 / p.cum_blocks as f64,
                ));
            }
        }
    }

    for row in sweep {
        let (Some(counts_panel), Some(rates_panel)) = (
            panel_letter(row.consensus, "counts-vs-size"),
            panel_letter(row.consensus, "rates-vs-size"),
        ) else {
            continue;
        };
        let tag = row.attack.label();
        let mean_victim_txs = super::experiments::mean_of(&row.runs, |m| m.victim_txs as f64);
        let mean_victim_blocks =
            super::experiments::mean_of(&row.runs, |m| m.victim_blocks as f64);
        rows.push((
            counts_panel.to_string(),
            row.committee as f64,
            format!("victim_txs_{tag}"),
            mean_victim_txs,
        ));
        rows.push((
            counts_panel.to_string(),
            row.committee as f64,
            format!("victim_blocks_{tag}"),
            mean_victim_blocks,
        ));
        rows.push((
            rates_panel.to_string(),
            row.committee as f64,
            format!("rate_tx_{tag}"),
            row.mean_rate_tx,
        ));
        rows.push((
            rates_panel.to_string(),
            row.committee as f64,
            format!("rate_block_{tag}"),
            row.mean_rate_block,
        ));
    }

    rows.sort_by(|a, b| {
        (a.0.as_str(), a.1, a.2.as_str())
            .partial_cmp(&(b.0.as_str(), b.1, b.2.as_str()))
            .expect("finite panel keys")
    });

    let mut out = String::from("panel,x,series,value\n");
    for (panel, x, series, value) in rows {
        out.push_str(&format!("{panel},{x},{series},{value:.6}\n"));
    }
    write_file(path, &out)
}

/// Newline-delimited `time,seq,kind,node,payload-digest` records.
pub fn write_event_log(path: &Path, log: &[LogRecord]) -> Result<(), OutputError> {
    let mut out = String::with_capacity(log.len() * 40);
    for rec in log {
        out.push_str(&rec.to_line());
        out.push('\n');
    }
    write_file(path, &out)
}

/// Sweep summary table: one row per (consensus, committee, attack).
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.consensus.label(), r.committee, r.attack.label()));
    let mut out =
        String::from("consensus,committee,attack,mean_rate_tx,stderr_rate_tx,mean_rate_block,mean_block_share\n");
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.consensus.label(),
            r.committee,
            r.attack.label(),
            r.mean_rate_tx,
            r.stderr_rate_tx,
            r.mean_rate_block,
            r.mean_block_share
        ));
    }
    write_file(path, &out)
}
