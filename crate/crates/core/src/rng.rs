use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator for one named purpose, so that e.g. batch shuffling and
/// parameter initialisation never share a stream.
pub(crate) fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

pub(crate) mod purpose {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const BATCHES: u64 = 3;
    pub const SYNTHETIC: u64 = 4;
}
