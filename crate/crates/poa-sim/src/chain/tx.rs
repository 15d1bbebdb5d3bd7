use std::fmt;

/// Simulated time in milliseconds since the start of the run.
pub type Millis = u64;

/// Index of a committee node. Sealers are numbered `0..N` in rotation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

/// Transaction sender. User accounts are minted per injection; the attacker
/// signs its synthetic transactions with a single account of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AccountId(pub u64);

impl AccountId {
    /// Fresh user account for the `seq`-th transaction injected at `node`.
    pub fn user(node: NodeId, seq: u64) -> Self {
        AccountId(((node.0 as u64) << 40) | (seq & 0xff_ffff_ffff))
    }

    /// The attacker's own account.
    pub fn sealer(node: NodeId) -> Self {
        AccountId((1 << 63) | ((node.0 as u64) << 40))
    }
}

/// Opaque transaction identifier, unique within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxId(pub u64);

impl TxId {
    pub fn user(node: NodeId, seq: u64) -> Self {
        TxId(((node.0 as u64) << 40) | (seq & 0xff_ffff_ffff))
    }

    /// Ids for transactions the attacker synthesizes while sealing.
    pub fn attacker(node: NodeId, seq: u64) -> Self {
        TxId((1 << 63) | ((node.0 as u64) << 40) | (seq & 0xff_ffff_ffff))
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Where a transaction comes from: a user, or one half of an attacker
/// frontrun/sandwich pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxKind {
    User,
    AttackerFront,
    AttackerBack,
}

/// A payment queued for inclusion. `arrival_time` is the simulated instant
/// the originating user handed it to its entry node; all pools order by it
/// identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub id: TxId,
    pub sender: AccountId,
    pub nonce: u64,
    pub gas_price: u64,
    pub gas_limit: u64,
    pub arrival_time: Millis,
    pub kind: TxKind,
}

impl Transaction {
    pub fn is_user(&self) -> bool {
        self.kind == TxKind::User
    }
}

/// Honest pool ordering: gas price descending, then nonce, arrival time and
/// id ascending. Total on any pool contents because ids are unique.
pub(crate) type OrderKey = (std::cmp::Reverse<u64>, u64, Millis, TxId);

/// Sort key realizing the honest ordering policy.
pub fn honest_order_key(tx: &Transaction) -> OrderKey {
    order_key(tx)
}

pub(crate) fn order_key(tx: &Transaction) -> OrderKey {
    (
        std::cmp::Reverse(tx.gas_price),
        tx.nonce,
        tx.arrival_time,
        tx.id,
    )
}
