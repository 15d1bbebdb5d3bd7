//! Deterministic discrete-event simulator of Proof-of-Authority networks.
//!
//! The crate models the two mainstream PoA engines (Aura and Clique) at the
//! consensus-message level, drives them with a single-threaded event loop
//! under a partially synchronous network (bounded per-link delay), and layers
//! two honest-but-profitable sealer behaviors on top:
//!
//! * transaction-ordering manipulation inside self-sealed blocks
//!   (displacement and sandwich insertion), and
//! * zero-delay turn frontrunning by an edge-turn sealer when the round
//!   leader is down.
//!
//! Three countermeasures are included: identity-checked Clique verification,
//! a shared hardware-randomness rotation (HPB style), and VRF-based
//! confidential leader election. The [`harness`] module runs the experiment
//! families, counts victim transactions/blocks and emits CSV and plot-panel
//! data.
//!
//! Everything is a pure function of the run configuration and a 64-bit seed:
//! equal seeds give byte-identical event logs and result files.

pub mod adversary;
pub mod aura;
pub mod chain;
pub mod clique;
pub mod harness;
pub mod netsim;
pub mod remedies;

pub use chain::{Block, BlockHeader, BlockId, ChainStore, Mempool, NodeId, Transaction, TxId};
