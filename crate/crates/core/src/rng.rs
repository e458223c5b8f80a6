//! Seed derivation shared by every algorithm so matched-seed runs stay paired.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags for independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Plan = 1,
    Fit = 2,
    Noise = 3,
    Init = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed, a stream tag and a path of indices
/// (typically timestep and agent).
pub fn derive_seed(base: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ (stream as u64).rotate_left(32));
    for &p in path {
        h = splitmix64(h ^ p);
    }
    h
}

pub fn rng_for(base: u64, stream: Stream, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, stream, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_separates_streams_and_paths() {
        let a = derive_seed(7, Stream::Plan, &[0, 1]);
        assert_eq!(a, derive_seed(7, Stream::Plan, &[0, 1]));
        assert_ne!(a, derive_seed(7, Stream::Fit, &[0, 1]));
        assert_ne!(a, derive_seed(7, Stream::Plan, &[1, 0]));
        assert_ne!(a, derive_seed(8, Stream::Plan, &[0, 1]));
    }
}
