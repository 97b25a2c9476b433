//! Counter-based seed derivation.
//!
//! A child seed depends only on its parent seed and its own counter, so
//! adding runs or graphs never shifts the seeds already handed out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn child(self, counter: u64) -> Seed {
        Seed(mix(mix(self.0 ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix(counter.wrapping_add(1)))))
    }

    /// Child seed keyed by a short tag, e.g. `"split"` or `"forest"`.
    pub fn named(self, tag: &str) -> Seed {
        // FNV-1a
        let h = tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        });
        self.child(h)
    }

    pub fn rng(self) -> Rng {
        Rng::seed_from_u64(self.0)
    }
}

/// Round half up, as used for every "fraction of a count" in the crate.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_are_stable_and_distinct() {
        let s = Seed(42);
        assert_eq!(s.child(3), Seed(42).child(3));
        assert_ne!(s.child(3), s.child(4));
        assert_ne!(s.named("split"), s.named("forest"));
        assert_ne!(s.child(0), s);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.49), 2);
        assert_eq!(round_half_up(0.0), 0);
    }
}
