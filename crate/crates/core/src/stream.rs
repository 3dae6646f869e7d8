//! Keyed random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 generator whose 256-bit
//! key is built from `(master_seed, domain, major, minor)`. Distinct keys give
//! independent streams, so replicate `k` of plan `p` draws the same numbers
//! no matter which worker runs it or in which order replicates complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to every sampling routine in this crate.
pub type StreamRng = ChaCha8Rng;

/// Stream domains. Keeps e.g. truth bootstrap round 3 and replicate 3 apart.
pub mod domain {
    pub const SYNTHETIC_POOL: u64 = 0x5359_4e54;
    pub const TRUTH_BOOTSTRAP: u64 = 0x5452_5554;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const COMPARISON: u64 = 0x434d_5052;
}

/// Builds the stream for `(master_seed, domain, major, minor)`.
pub fn derive_stream(master_seed: u64, domain: u64, major: u64, minor: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&major.to_le_bytes());
    key[24..32].copy_from_slice(&minor.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream for replicate `index` of the plan identified by `plan_tag`.
pub fn replicate_stream(master_seed: u64, plan_tag: u64, index: u64) -> StreamRng {
    derive_stream(master_seed, domain::REPLICATE, plan_tag, index)
}
