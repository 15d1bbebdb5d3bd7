//! The three countermeasures to turn frontrunning: identity-checked Clique
//! verification, hardware-randomness rotation (HPB style), and VRF-based
//! confidential leader election.

mod hpb;
mod patched;
mod vrf;

pub use hpb::{hpb_fallback_sealer, hpb_in_turn_sealer, hpb_propose, hpb_verify, HardwareOracle};
pub use patched::{clique_verify_patched, expected_edge_turn};
pub use vrf::{
    vrf_hash, vrf_is_candidate, vrf_keygen, vrf_leader_election, vrf_prove, vrf_seed, vrf_verify,
    KeyRegistry, VrfKeyPair, VrfOutput,
};
