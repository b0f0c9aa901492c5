//! Seeded random streams.
//!
//! Every stochastic routine takes a [`Stream`], a ChaCha8 generator keyed by
//! the run seed and positioned on its own 64-bit stream id. Independent
//! consumers (chains, proposal draws, auxiliary samplers, per-draw diagnostic
//! work) use disjoint stream ids, so results do not depend on execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

/// Stream-id domains. The upper 16 bits select the consumer, the rest index it.
pub mod domain {
    pub const SIMULATION: u64 = 1;
    pub const CHAIN_PROPOSAL: u64 = 2;
    pub const CHAIN_AUX: u64 = 3;
    pub const TUNING_PROPOSAL: u64 = 4;
    pub const TUNING_AUX: u64 = 5;
    pub const ACD_DRAW: u64 = 6;
    pub const PREDICTION: u64 = 7;
}

/// Independent generator for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}

/// Uniform on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
