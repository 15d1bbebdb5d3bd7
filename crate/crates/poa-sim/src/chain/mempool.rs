use std::collections::{BTreeMap, HashMap};

use super::block::Block;
use super::tx::{order_key, AccountId, OrderKey, Transaction};

/// Per-transaction gas used by the workload; every payment is a plain
/// transfer.
pub const DEFAULT_TX_GAS: u64 = 21_000;

/// Per-block gas limit. Large enough that gas never constrains the stock
/// experiments (a block holds ~1400 transfers; runs produce a few hundred
/// per block).
pub const DEFAULT_BLOCK_GAS_LIMIT: u64 = 30_000_000;

const DEFAULT_CAPACITY: usize = 1 << 20;

/// Pending-transaction pool with per-sender nonce tracking.
///
/// Pop order under the honest policy is total and deterministic given the
/// contents: the pool is keyed by (gas price desc, nonce, arrival, id).
#[derive(Debug, Clone)]
pub struct Mempool {
    ordered: BTreeMap<OrderKey, Transaction>,
    by_slot: HashMap<(AccountId, u64), OrderKey>,
    /// Next nonce expected from a sender given confirmed inclusions.
    base_nonce: HashMap<AccountId, u64>,
    /// Number of contiguous pending nonces per sender above the base.
    pending_of: HashMap<AccountId, u64>,
    block_gas_limit: u64,
    capacity: usize,
}

impl Default for Mempool {
    fn default() -> Self {
        Self::new(DEFAULT_BLOCK_GAS_LIMIT, DEFAULT_CAPACITY)
    }
}

impl Mempool {
    pub fn new(block_gas_limit: u64, capacity: usize) -> Self {
        Mempool {
            ordered: BTreeMap::new(),
            by_slot: HashMap::new(),
            base_nonce: HashMap::new(),
            pending_of: HashMap::new(),
            block_gas_limit: block_gas_limit.max(1),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    pub fn block_gas_limit(&self) -> u64 {
        self.block_gas_limit
    }

    fn base(&self, sender: AccountId) -> u64 {
        self.base_nonce.get(&sender).copied().unwrap_or(0)
    }

    fn pending(&self, sender: AccountId) -> u64 {
        self.pending_of.get(&sender).copied().unwrap_or(0)
    }

    /// Queue a transaction: nonce check and gas check, then admission.
    ///
    /// Accepts iff the nonce is the sender's next expected one (base nonce
    /// plus contiguous pending) and the gas limit fits in a block. A pending
    /// (sender, nonce) slot is replaced only by a strictly higher gas price.
    pub fn validate_tx(&mut self, tx: &Transaction) -> bool {
        if tx.gas_limit == 0 || tx.gas_limit > self.block_gas_limit {
            return false;
        }
        let base = self.base(tx.sender);
        let pending = self.pending(tx.sender);
        if tx.nonce < base {
            return false; // already confirmed
        }
        if tx.nonce < base + pending {
            // Occupied slot: replace-by-fee, strictly higher price only.
            let key = self.by_slot[&(tx.sender, tx.nonce)];
            let old = &self.ordered[&key];
            if tx.gas_price <= old.gas_price {
                return false;
            }
            self.ordered.remove(&key);
            let new_key = order_key(tx);
            self.by_slot.insert((tx.sender, tx.nonce), new_key);
            self.ordered.insert(new_key, tx.clone());
            return true;
        }
        if tx.nonce > base + pending {
            return false; // nonce gap
        }
        if self.ordered.len() >= self.capacity {
            // Full: admit only if the newcomer outranks the worst entry.
            let worst = *self.ordered.keys().next_back().expect("non-empty");
            if order_key(tx) >= worst {
                return false;
            }
            self.evict(worst);
        }
        self.insert_unchecked(tx.clone());
        true
    }

    fn insert_unchecked(&mut self, tx: Transaction) {
        let key = order_key(&tx);
        self.by_slot.insert((tx.sender, tx.nonce), key);
        *self.pending_of.entry(tx.sender).or_insert(0) += 1;
        self.ordered.insert(key, tx);
    }

    /// Drop one pending transaction plus any higher nonces of the same
    /// sender that would be left gapped.
    fn evict(&mut self, key: OrderKey) {
        let Some(victim) = self.ordered.remove(&key) else {
            return;
        };
        self.by_slot.remove(&(victim.sender, victim.nonce));
        let base = self.base(victim.sender);
        let top = base + self.pending(victim.sender);
        for n in victim.nonce + 1..top {
            if let Some(k) = self.by_slot.remove(&(victim.sender, n)) {
                self.ordered.remove(&k);
            }
        }
        self.pending_of
            .insert(victim.sender, victim.nonce.saturating_sub(base));
    }

    /// All pending transactions in honest order. Pure; the pool is not
    /// mutated.
    pub fn honest_order(&self) -> Vec<Transaction> {
        self.ordered.values().cloned().collect()
    }

    /// Honest-order prefix fitting the block gas limit.
    pub fn pop_for_block(&self) -> Vec<Transaction> {
        let mut out = Vec::new();
        let mut gas = 0u64;
        for tx in self.ordered.values() {
            if gas + tx.gas_limit > self.block_gas_limit {
                break;
            }
            gas += tx.gas_limit;
            out.push(tx.clone());
        }
        out
    }

    /// A block joined the canonical chain: drop its transactions and advance
    /// sender nonces.
    pub fn connect_block(&mut self, block: &Block) {
        for tx in &block.txs {
            if let Some(key) = self.by_slot.remove(&(tx.sender, tx.nonce)) {
                self.ordered.remove(&key);
            }
            let base = self.base(tx.sender);
            if tx.nonce + 1 > base {
                self.base_nonce.insert(tx.sender, tx.nonce + 1);
            }
            let new_base = self.base(tx.sender);
            // Stale pending below the new base are unincludable; drop them.
            let top = base + self.pending(tx.sender);
            let mut kept = 0;
            for n in base..top {
                if let Some(k) = self.by_slot.get(&(tx.sender, n)).copied() {
                    if n < new_base {
                        self.by_slot.remove(&(tx.sender, n));
                        self.ordered.remove(&k);
                    } else {
                        kept += 1;
                    }
                }
            }
            self.pending_of.insert(tx.sender, kept);
        }
    }

    /// A block left the canonical chain in a reorg: its transactions become
    /// pending again.
    pub fn disconnect_block(&mut self, block: &Block) {
        for tx in block.txs.iter().rev() {
            let base = self.base(tx.sender);
            if base > tx.nonce {
                self.base_nonce.insert(tx.sender, tx.nonce);
            }
            if !self.by_slot.contains_key(&(tx.sender, tx.nonce)) {
                self.insert_unchecked(tx.clone());
            }
        }
    }
}
