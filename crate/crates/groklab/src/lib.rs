//! groklab: a numerical laboratory for studying grokking (delayed
//! generalization) through reduced loss landscapes.
//!
//! The crate trains small MLPs under controlled initialization scale and
//! weight decay, computes reduced train/test loss landscapes by constrained
//! spherical optimization, integrates the resulting 2D training dynamics,
//! and measures grokking-time laws and de-grokking interventions.
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one demonstrates a single capability end to end. A thin `groklab`
//! binary exposes the same machinery as subcommands.

pub mod error;
pub mod nn;

pub use error::{Error, Result};

/// Mix a base seed with a salt into an independent derived seed.
///
/// Used to give every sub-stream (teacher draw, data draw, grid cell,
/// restart, sweep run) its own deterministic RNG stream.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
