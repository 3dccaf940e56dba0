//! Seed derivation. Every random draw in the toolkit comes from a generator
//! seeded by a pure function of the user seed and the draw's coordinates
//! (step, instance id), so parallel evaluation cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Domain tags keep streams for different purposes independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    RandomScore = 1,
    Batch = 2,
    Negative = 3,
}

pub fn derive_seed(seed: u64, stream: Stream, step: u64, key: Option<&str>) -> u64 {
    let mut h = splitmix(seed ^ splitmix(stream as u64));
    h = splitmix(h ^ step);
    if let Some(key) = key {
        h = splitmix(h ^ fnv1a(key.as_bytes()));
    }
    h
}

pub fn stream_rng(seed: u64, stream: Stream, step: u64, key: Option<&str>) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, step, key))
}
