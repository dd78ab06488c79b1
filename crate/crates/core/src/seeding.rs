//! Counter-based seed derivation.
//!
//! Every random quantity in a realization is a pure function of the master
//! seed and a short tuple of integer tags, so a lattice does not depend on the
//! window it is observed through, nor on evaluation order or thread count.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `tags` into `seed`, one mixing round per tag.
#[inline]
pub fn stream(seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for (i, &tag) in tags.iter().enumerate() {
        h = mix64(h ^ mix64(tag.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))));
    }
    h
}

/// Maps 64 random bits to a uniform double in `[0, 1)`.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// FNV-1a, used to turn role names into tags.
pub fn role_tag(role: &str) -> u64 {
    role.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for one row of an experiment, identified by replicate, window size and role.
pub fn seed_for(seed_base: u64, replicate: u64, n: u64, role: &str) -> u64 {
    stream(seed_base, &[replicate, n, role_tag(role)])
}
