//! Counter-based seed derivation: every random stream is keyed by a master
//! seed plus a tuple of integers (domain tag, expert, iteration, ...), so
//! changing K or T never shifts or correlates other streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `parts` under `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master.wrapping_add(GOLDEN));
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(GOLDEN)));
    }
    h
}

pub fn stream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

/// Domain tags for derived streams.
pub mod tag {
    pub const INIT: u64 = 0;
    pub const LEARNER_ROLLOUT: u64 = 1;
    pub const EXPERT_REWARD: u64 = 2;
    pub const EXPERT_DATA: u64 = 3;
}
