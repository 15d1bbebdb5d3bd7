//! Event-log inspection: parse an exported log, validate its ordering
//! invariants and summarize it.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: expected `time,seq,kind,node,digest`")]
    Malformed { line: usize },
    #[error("line {line}: events out of (time, seq) order")]
    OutOfOrder { line: usize },
}

#[derive(Debug, Default)]
pub struct ReplaySummary {
    pub events: u64,
    pub first_ms: u64,
    pub last_ms: u64,
    pub per_kind: BTreeMap<String, u64>,
    pub nodes: u32,
}

/// Parse and validate a `time,seq,kind,node,digest` log.
pub fn replay_log(text: &str) -> Result<ReplaySummary, ReplayError> {
    let mut summary = ReplaySummary::default();
    let mut prev: Option<(u64, u64)> = None;
    let mut max_node = 0u32;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(5, ',');
        let time: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(ReplayError::Malformed { line: line_no })?;
        let seq: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(ReplayError::Malformed { line: line_no })?;
        let kind = parts
            .next()
            .ok_or(ReplayError::Malformed { line: line_no })?;
        let node: u32 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(ReplayError::Malformed { line: line_no })?;
        let digest = parts
            .next()
            .ok_or(ReplayError::Malformed { line: line_no })?;
        if digest.is_empty() {
            return Err(ReplayError::Malformed { line: line_no });
        }
        if let Some((pt, ps)) = prev {
            if (time, seq) < (pt, ps) {
                return Err(ReplayError::OutOfOrder { line: line_no });
            }
        }
        prev = Some((time, seq));
        if summary.events == 0 {
            summary.first_ms = time;
        }
        summary.last_ms = time;
        summary.events += 1;
        *summary.per_kind.entry(kind.to_string()).or_insert(0) += 1;
        max_node = max_node.max(node);
    }
    if summary.events > 0 {
        summary.nodes = max_node + 1;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_summarizes() {
        let text = "0,0,inject-tx,0,0000000000000001\n\
                    5,1,deliver-tx,1,0000000000000001\n\
                    5,2,deliver-tx,2,0000000000000001\n";
        let s = replay_log(text).unwrap();
        assert_eq!(s.events, 3);
        assert_eq!(s.per_kind["deliver-tx"], 2);
        assert_eq!(s.nodes, 3);
        assert_eq!((s.first_ms, s.last_ms), (0, 5));
    }

    #[test]
    fn rejects_disorder_and_garbage() {
        assert!(matches!(
            replay_log("5,1,a,0,0\n0,0,b,0,0\n"),
            Err(ReplayError::OutOfOrder { line: 2 })
        ));
        assert!(matches!(
            replay_log("not-a-log\n"),
            Err(ReplayError::Malformed { line: 1 })
        ));
    }
}
