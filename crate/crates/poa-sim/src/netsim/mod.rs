//! Deterministic discrete-event engine: simulated clock, partially
//! synchronous message delivery with bound delta, node lifecycle including
//! scheduled crashes, and the transaction-generation workload.

mod engine;
mod event;
mod faults;
mod net;
pub(crate) mod rng;
mod workload;

pub use engine::{oracle_for_run, run, ConsensusKind, MutePlan, RunCounters, SimResult, SimSetup};
pub use event::{EventKind, EventQueue, LogRecord, SimEvent, TimerKind};
pub use faults::{FaultEntry, FaultSchedule};
pub use net::{NetParams, NetworkModel};
pub use workload::Workload;
