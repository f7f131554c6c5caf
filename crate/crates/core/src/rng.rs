//! Seed derivation for reproducible, parallel replications.
//!
//! Every replication gets its own ChaCha8 generator keyed by a hash of the
//! experiment seed and the replication index. Independent purposes within a
//! replication (data generation, proposal draws) use separate ChaCha streams
//! of the same key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream used for simulated data.
pub const DATA_STREAM: u64 = 0;
/// Stream used for importance-sampling proposal draws.
pub const PROPOSAL_STREAM: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `(seed, index)` used as the key of a replication generator.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for replication `index` of an experiment seeded with `seed`.
pub fn replication_rng(seed: u64, index: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, index));
    rng.set_stream(stream);
    rng
}
