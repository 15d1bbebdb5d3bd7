//! Blockchain data model shared by every consensus variant: transactions,
//! per-node mempools, blocks, the block tree with cumulative scores, and the
//! highest-score fork choice.

mod block;
mod mempool;
mod store;
mod tx;

pub use block::{build_block, genesis_block, Block, BlockHeader, BlockId, SealExtra};
pub use mempool::{Mempool, DEFAULT_BLOCK_GAS_LIMIT, DEFAULT_TX_GAS};
pub use store::{ChainStore, InsertOutcome, ORPHAN_BUFFER_LIMIT};
pub use tx::{honest_order_key, AccountId, Millis, NodeId, Transaction, TxId, TxKind};
