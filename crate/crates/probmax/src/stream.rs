//! Deterministic random-stream derivation.
//!
//! Every stochastic component takes an explicit generator; streams for
//! independent work units (replications, metric evaluations, reference
//! computations) are derived from a base seed plus integer tags so that
//! results are reproducible and independent of scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purpose tags. Keeping them distinct guarantees that e.g. the
/// solver stream of replication 3 never collides with its metric stream.
pub const TAG_SOLVER: u64 = 1;
pub const TAG_METRIC: u64 = 2;
pub const TAG_REFERENCE: u64 = 3;
pub const TAG_START: u64 = 4;
pub const TAG_GATE: u64 = 5;
pub const TAG_TRAJECTORY: u64 = 6;
pub const TAG_LIPSCHITZ: u64 = 7;
pub const TAG_NOISE: u64 = 8;
pub const TAG_VOLUME: u64 = 9;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed and tags into a single 64-bit value.
pub fn mix(base_seed: u64, tags: &[u64]) -> u64 {
    let mut state = base_seed ^ 0x243F_6A88_85A3_08D3;
    let mut h = splitmix64(&mut state) ^ (tags.len() as u64);
    for &t in tags {
        state ^= t;
        h = h.rotate_left(23) ^ splitmix64(&mut state);
    }
    h
}

/// Derives an independent ChaCha stream from a base seed and tags.
pub fn derive_rng(base_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = mix(base_seed, tags);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// FNV-1a over bytes; used for content-addressed caching of problem specs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01B3);
    }
    h
}
