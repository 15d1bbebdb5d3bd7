//! VRF-based confidential sealer election.
//!
//! A sealer is a candidate for a height iff its keyed hash of the height's
//! negotiated seed, read as a fraction of the hash range, falls below a
//! threshold. Candidates reveal (hash, proof) only when proposing, and
//! verifiers admit a block iff the proof checks out and the hash is below
//! the threshold — so nobody can predict or impersonate the winners.
//!
//! The VRF itself is a deterministic keyed-hash simulation: hs = H(sk, s),
//! proof = H("proof", sk, s), and verification recomputes both through a
//! key-registry trapdoor. That is adequate for a simulator and NOT a secure
//! VRF; a production system would use ECVRF.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::chain::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VrfKeyPair {
    pub sk: [u8; 32],
    pub pk: [u8; 32],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VrfOutput {
    pub hash: [u8; 32],
    pub proof: [u8; 32],
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Key generation: the public key is a pure function of the secret.
pub fn vrf_keygen(seed: u64) -> VrfKeyPair {
    let sk = digest(&[b"vrf-sk", &seed.to_be_bytes()]);
    let pk = digest(&[b"vrf-pk", &sk]);
    VrfKeyPair { sk, pk }
}

/// Deterministic per-(sk, seed) hash output.
pub fn vrf_hash(sk: &[u8; 32], s: &[u8; 32]) -> [u8; 32] {
    digest(&[b"vrf-hs", sk, s])
}

/// Proof for the hash of (sk, seed).
pub fn vrf_prove(sk: &[u8; 32], s: &[u8; 32]) -> [u8; 32] {
    digest(&[b"vrf-proof", sk, s])
}

/// Registry mapping public keys back to their secrets: the simulator's
/// verification trapdoor.
#[derive(Debug, Clone, Default)]
pub struct KeyRegistry {
    keys: HashMap<[u8; 32], [u8; 32]>,
    by_node: HashMap<NodeId, VrfKeyPair>,
}

impl KeyRegistry {
    /// Deterministic per-committee key setup.
    pub fn for_committee(master_seed: u64, committee: &[NodeId]) -> Self {
        let mut reg = KeyRegistry::default();
        for &node in committee {
            let pair_seed = u64::from_be_bytes(
                digest(&[b"vrf-node", &master_seed.to_be_bytes(), &(node.0 as u64).to_be_bytes()])
                    [..8]
                    .try_into()
                    .expect("8 bytes"),
            );
            let pair = vrf_keygen(pair_seed);
            reg.keys.insert(pair.pk, pair.sk);
            reg.by_node.insert(node, pair);
        }
        reg
    }

    pub fn pair_of(&self, node: NodeId) -> Option<&VrfKeyPair> {
        self.by_node.get(&node)
    }

    fn sk_of_pk(&self, pk: &[u8; 32]) -> Option<&[u8; 32]> {
        self.keys.get(pk)
    }
}

/// 1 iff (hs, proof) were produced from (sk, s) for the pk's secret; 0 on
/// any mismatch (wrong key, wrong seed, tampered hash or proof).
pub fn vrf_verify(
    registry: &KeyRegistry,
    pk: &[u8; 32],
    s: &[u8; 32],
    hs: &[u8; 32],
    proof: &[u8; 32],
) -> bool {
    match registry.sk_of_pk(pk) {
        Some(sk) => vrf_hash(sk, s) == *hs && vrf_prove(sk, s) == *proof,
        None => false,
    }
}

/// Negotiated seed for a (height, retry) election round.
pub fn vrf_seed(master: u64, height: u64, retry: u32) -> [u8; 32] {
    digest(&[
        b"vrf-seed",
        &master.to_be_bytes(),
        &height.to_be_bytes(),
        &retry.to_be_bytes(),
    ])
}

/// A hash is a winning ticket iff, read as a fraction of the hash range, it
/// is below the threshold.
pub fn vrf_is_candidate(hs: &[u8; 32], threshold: f64) -> bool {
    let ticket = u64::from_be_bytes(hs[..8].try_into().expect("8 bytes"));
    (ticket as f64) < threshold * (u64::MAX as f64)
}

/// Winner set for one height: every sealer whose ticket clears the
/// threshold. Empty means the height must retry with the next derived seed.
pub fn vrf_leader_election(
    registry: &KeyRegistry,
    committee: &[NodeId],
    s: &[u8; 32],
    threshold: f64,
) -> Vec<NodeId> {
    committee
        .iter()
        .copied()
        .filter(|node| {
            let pair = registry.pair_of(*node).expect("registered sealer");
            vrf_is_candidate(&vrf_hash(&pair.sk, s), threshold)
        })
        .collect()
}
