//! Named, reproducible random substreams.
//!
//! Every random draw in a run descends from one root seed. A substream is
//! addressed by a label and a list of indices (trial, method, chunk, ...), so
//! the stream a consumer sees does not depend on execution order or on how
//! many other substreams were drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derive the 64-bit seed of substream `label[indices...]` under `root`.
pub fn substream_seed(root: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ fnv1a(label));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    h
}

/// Open the substream `label[indices...]` under `root`.
pub fn substream(root: u64, label: &str, indices: &[u64]) -> SimRng {
    SimRng::seed_from_u64(substream_seed(root, label, indices))
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
