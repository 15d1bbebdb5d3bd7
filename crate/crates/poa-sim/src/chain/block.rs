use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::tx::{Millis, NodeId, Transaction};

/// Opaque block identifier derived from the header and body contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u64);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Variant-specific seal material carried in the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SealExtra {
    None,
    /// Hardware randomness the proposer sampled for this round, so verifiers
    /// can compare it with their own sample.
    HpbTrace(u64),
    /// VRF output and proof for the (height, retry) seed the proposer won.
    Vrf {
        retry: u32,
        hash: [u8; 32],
        proof: [u8; 32],
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub number: u64,
    pub parent: BlockId,
    pub sealer: NodeId,
    /// 2 for the in-turn sealer, 1 for edge-turn sealers. Genesis carries 0.
    pub difficulty: u64,
    pub timestamp: Millis,
    pub extra: SealExtra,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
}

impl Block {
    pub fn number(&self) -> u64 {
        self.header.number
    }

    pub fn sealer(&self) -> NodeId {
        self.header.sealer
    }

    pub fn difficulty(&self) -> u64 {
        self.header.difficulty
    }

    pub fn timestamp(&self) -> Millis {
        self.header.timestamp
    }
}

fn compute_id(header: &BlockHeader, txs: &[Transaction]) -> BlockId {
    let mut h = Sha256::new();
    h.update(header.number.to_be_bytes());
    h.update(header.parent.0.to_be_bytes());
    h.update((header.sealer.0 as u64).to_be_bytes());
    h.update(header.difficulty.to_be_bytes());
    h.update(header.timestamp.to_be_bytes());
    match &header.extra {
        SealExtra::None => h.update([0u8]),
        SealExtra::HpbTrace(t) => {
            h.update([1u8]);
            h.update(t.to_be_bytes());
        }
        SealExtra::Vrf { retry, hash, proof } => {
            h.update([2u8]);
            h.update(retry.to_be_bytes());
            h.update(hash);
            h.update(proof);
        }
    }
    for tx in txs {
        h.update(tx.id.0.to_be_bytes());
    }
    let digest = h.finalize();
    let mut eight = [0u8; 8];
    eight.copy_from_slice(&digest[..8]);
    BlockId(u64::from_be_bytes(eight))
}

/// Seal a block. No duplicate transaction ids may appear in the body.
pub fn build_block(
    parent: &Block,
    sealer: NodeId,
    difficulty: u64,
    timestamp: Millis,
    txs: Vec<Transaction>,
    extra: SealExtra,
) -> Arc<Block> {
    debug_assert!({
        let mut ids: Vec<_> = txs.iter().map(|t| t.id).collect();
        ids.sort();
        ids.dedup();
        ids.len() == txs.len()
    });
    let header = BlockHeader {
        number: parent.number() + 1,
        parent: parent.id,
        sealer,
        difficulty,
        timestamp,
        extra,
    };
    let id = compute_id(&header, &txs);
    Arc::new(Block { id, header, txs })
}

/// The run's genesis block: height 0, difficulty 0, timestamp 0.
pub fn genesis_block() -> Arc<Block> {
    let header = BlockHeader {
        number: 0,
        parent: BlockId(0),
        sealer: NodeId(0),
        difficulty: 0,
        timestamp: 0,
        extra: SealExtra::None,
    };
    let id = compute_id(&header, &[]);
    Arc::new(Block {
        id,
        header,
        txs: Vec::new(),
    })
}
