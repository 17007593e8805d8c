//! Counter-based random streams for reproducible parallel Monte Carlo.
//!
//! Every replicate gets its own ChaCha stream keyed by
//! `(global seed, purpose tag, replicate index, substream index)` through a
//! SHA-256 key derivation. Streams are independent of scheduling order, so a
//! replicate loop can run on any number of workers and still produce
//! bit-identical output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

/// Factory for per-replicate streams within one named estimator run.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    seed: u64,
    tag: String,
}

impl StreamFactory {
    pub fn new(seed: u64, tag: &str) -> Self {
        Self {
            seed,
            tag: tag.to_string(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Stream for one replicate.
    pub fn stream(&self, replicate: u64) -> ChaCha8Rng {
        self.substream(replicate, 0)
    }

    /// Independent sub-stream of one replicate (e.g. one of the `p` paths in
    /// a moment estimator).
    pub fn substream(&self, replicate: u64, sub: u64) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.tag.len() as u64).to_le_bytes());
        hasher.update(self.tag.as_bytes());
        hasher.update(replicate.to_le_bytes());
        hasher.update(sub.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}

/// One standard normal draw.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Fill a slice with standard normal draws.
pub fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}
