//! Cooperative multi-agent codec-rate adaptation for XR downlink traffic.
//!
//! The crate is `no_std` (with `alloc`) and contains only the algorithmic
//! pieces: a small neural-network substrate with hand-written backward
//! passes ([`nn`]), a windowed packet-level downlink simulator ([`env`]), the
//! optimistic weighted QMIX learner with buffer-driven action masking
//! ([`marl`]) and the threshold-based APS rate controller ([`baselines`]).
//!
//! File formats, configuration parsing and the command line live in the
//! companion `xrcodec` crate.
#![no_std]
// `!(x > 0.0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod env;
pub mod marl;
pub mod nn;

pub use rand_chacha::ChaCha8Rng as SimRng;

/// Seeds the crate-wide deterministic generator.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
