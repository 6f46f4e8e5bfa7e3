//! Domain-separated random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! 256-bit key is `SHA-256("tardos-nns/v1" || len(domain) || domain || seed_le)`. The 64-bit
//! ChaCha stream id selects a sub-stream (a user row, a hash table, a trial),
//! and per-segment draws seek to a fixed word position, so results do not
//! depend on iteration order or thread count. Outputs are pinned to
//! `rand_chacha` 0.3 and are reproducible across platforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const KEY_PREFIX: &[u8] = b"tardos-nns/v1";

/// Master seed for every randomized operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

pub(crate) mod domain {
    pub const BIAS: &str = "bias";
    pub const COLLUDERS: &str = "colluders";
    pub const CODEBOOK_ROW: &str = "codebook-row";
    pub const FORGE: &str = "forge";
    pub const PLANES: &str = "lsh-planes";
    pub const TRIAL: &str = "trial";
}

impl Seed {
    /// Stream `stream` of the sub-generator named `domain`.
    pub fn stream(self, domain: &str, stream: u64) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(KEY_PREFIX);
        h.update((domain.len() as u64).to_le_bytes());
        h.update(domain.as_bytes());
        h.update(self.0.to_le_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&h.finalize());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng
    }

    /// A child seed, used to give each Monte-Carlo trial its own key space.
    pub fn child(self, domain: &str, index: u64) -> Seed {
        Seed(self.stream(domain, index).next_u64())
    }
}

/// Uniform draw on the open interval (0, 1): `(m + 1/2) / 2^52` for a 52-bit `m`.
pub(crate) fn open01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Integer threshold `t` such that `next_u64() < t` happens with probability `p`.
pub(crate) fn bernoulli_threshold(p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        // 2^64 * p, exact for the 53-bit mantissa
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}
