//! Seed splitting.
//!
//! Every random quantity in the crate is drawn from a stream whose seed is
//! derived from the single scenario seed by [`derive`]:
//!
//! ```text
//! trial seed    = derive(scenario_seed, TRIAL, trial_index)
//! server points = stream(derive(trial_seed, SERVERS, 0))
//! user points   = stream(derive(trial_seed, USERS, 0))
//! user u policy = stream(derive(policy_seed, USER, u))
//! user u motion = stream(derive(trial_seed, MOBILITY, u))
//! probe i       = (unit(derive(seed, PROBE_X, i)), unit(derive(seed, PROBE_Y, i)))
//! ```
//!
//! Derivation is a keyed SplitMix64 finalizer chain, so any trial, user or
//! probe can be regenerated in isolation and results never depend on how
//! work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

pub mod tag {
    pub const TRIAL: u64 = 1;
    pub const SERVERS: u64 = 2;
    pub const USERS: u64 = 3;
    pub const USER: u64 = 4;
    pub const MOBILITY: u64 = 5;
    pub const PROBE_X: u64 = 6;
    pub const PROBE_Y: u64 = 7;
    pub const POLICY: u64 = 8;
    pub const BALLS: u64 = 9;
    pub const VECTOR: u64 = 10;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const KEY_TAG: u64 = 0xD1B5_4A32_D192_ED03;
const KEY_INDEX: u64 = 0x8CB9_2BA7_2F3D_8DD7;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(tag, index)` under `seed`.
#[inline]
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    let h = mix64(seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ tag.wrapping_mul(KEY_TAG));
    mix64(h ^ index.wrapping_add(1).wrapping_mul(KEY_INDEX))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform value in `[0, 1)` from the top 53 bits.
#[inline]
pub fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_separates_tags_and_indices() {
        let a = derive(42, tag::USERS, 0);
        assert_ne!(a, derive(42, tag::SERVERS, 0));
        assert_ne!(a, derive(42, tag::USERS, 1));
        assert_ne!(a, derive(43, tag::USERS, 0));
        assert_eq!(a, derive(42, tag::USERS, 0));
    }

    #[test]
    fn streams_are_reproducible() {
        let mut s1 = stream(7);
        let mut s2 = stream(7);
        for _ in 0..64 {
            assert_eq!(s1.random::<u64>(), s2.random::<u64>());
        }
    }

    #[test]
    fn unit_stays_in_half_open_interval() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
    }
}
