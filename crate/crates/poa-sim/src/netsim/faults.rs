//! Crash schedules. Entries are absolute simulated intervals during which a
//! node neither sends nor processes anything; messages addressed to it are
//! dropped, not queued.

use crate::chain::{Millis, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultEntry {
    pub node: NodeId,
    pub crash_at: Millis,
    /// `None` = permanent crash.
    pub recover_at: Option<Millis>,
}

#[derive(Debug, Clone, Default)]
pub struct FaultSchedule {
    pub entries: Vec<FaultEntry>,
}

impl FaultSchedule {
    pub fn none() -> Self {
        FaultSchedule::default()
    }

    pub fn push(&mut self, node: NodeId, crash_at: Millis, recover_at: Option<Millis>) {
        if let Some(r) = recover_at {
            assert!(crash_at < r, "crash_at must precede recover_at");
        }
        self.entries.push(FaultEntry {
            node,
            crash_at,
            recover_at,
        });
    }

    /// Is `node` scheduled to be down at instant `t`?
    pub fn down_at(&self, node: NodeId, t: Millis) -> bool {
        self.entries.iter().any(|e| {
            e.node == node && e.crash_at <= t && e.recover_at.map(|r| t < r).unwrap_or(true)
        })
    }
}
