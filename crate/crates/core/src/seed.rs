//! Deterministic derivation of independent random streams from one master seed.
//!
//! Every stochastic component asks for a stream keyed by a module tag and up to
//! two indices (typically cluster and time). The derived seed depends only on
//! those inputs, so parallel and sequential execution draw identical numbers and
//! a partial re-run reproduces the corresponding part of a full run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a; stable across platforms and compiler versions.
fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derived seed for `(master, tag, a, b)`.
pub fn derive_seed(master: u64, tag: &str, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ tag_hash(tag));
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(17))
}

pub fn stream(master: u64, tag: &str, a: u64, b: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tag, a, b))
}
