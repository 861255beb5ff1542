//! Seed derivation.
//!
//! Every random draw in an episode comes from a ChaCha8 substream keyed by the
//! episode seed and a path of integers (stream tag, then indices). Substreams
//! are independent of evaluation order, so lazily sampled links and parallel
//! evaluation reproduce the sequential trace exactly.
//!
//! Stream tags, in documented draw order:
//! 1. `PLACEMENT` – candidate G-UE positions and per-UAV user selection
//! 2. `DESTINATION` – safe-zone destinations
//! 3. `TRAFFIC` – Poisson arrivals, one substream per G-UE
//! 4. `FADING` – small-scale fading, one substream per (slot, tx, rx)
//! 5. `POLICY` – baseline policy randomness

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PLACEMENT: u64 = 1;
pub const DESTINATION: u64 = 2;
pub const TRAFFIC: u64 = 3;
pub const FADING: u64 = 4;
pub const POLICY: u64 = 5;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `seed`; distinct paths give unrelated keys.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_stream() {
        let a: u64 = substream(7, &[FADING, 3, 1]).random();
        let b: u64 = substream(7, &[FADING, 3, 1]).random();
        assert_eq!(a, b);
    }

    #[test]
    fn path_order_matters() {
        assert_ne!(derive_key(7, &[1, 2]), derive_key(7, &[2, 1]));
        assert_ne!(derive_key(7, &[1]), derive_key(8, &[1]));
    }
}
