//! Deterministic random streams.
//!
//! Every replica draws from its own ChaCha8 stream keyed by the run seed and
//! a stream id. ChaCha is counter based, so stream `k` of seed `s` is the same
//! sequence no matter how many other streams exist or in which order the
//! replicas are advanced.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream id used by the swap coordinator; replicas use `0..R`.
pub const COORDINATOR_STREAM: u64 = u64::MAX;

/// Expands a 64-bit seed into a 256-bit ChaCha key (SplitMix64).
pub fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    key
}

/// The `stream`-th independent stream of `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::from_seed(expand_seed(seed));
    rng.set_stream(stream);
    rng
}
