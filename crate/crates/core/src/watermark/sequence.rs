//! Keyed, prefix-stable bit sequences.
//!
//! Bits come from a ChaCha8 keystream seeded by the 64-bit key and using the
//! block index as the stream id, so bit `i` of block `b` depends only on
//! `(seed, b, i)`. Extending a sequence never changes its existing prefix and
//! blocks can be generated in any order or in parallel.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Secret key plus the block the stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WatermarkKey {
    pub seed: u64,
    pub block_index: u64,
}

impl WatermarkKey {
    pub fn new(seed: u64, block_index: usize) -> Self {
        Self {
            seed,
            block_index: block_index as u64,
        }
    }
}

/// An ordered run of watermark bits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WatermarkSequence {
    bits: Vec<bool>,
}

impl WatermarkSequence {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Bipolar symbol for bit `i`: 0 → −1, 1 → +1.
    #[inline]
    pub fn symbol(&self, i: usize) -> f64 {
        if self.bits[i] {
            1.0
        } else {
            -1.0
        }
    }

    pub fn bipolar(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.bits.iter().map(|&b| if b { 1.0 } else { -1.0 })
    }

    pub fn prefix(&self, n: usize) -> WatermarkSequence {
        WatermarkSequence {
            bits: self.bits[..n.min(self.bits.len())].to_vec(),
        }
    }

    /// Every bit flipped, i.e. the bipolar negation.
    pub fn negated(&self) -> WatermarkSequence {
        WatermarkSequence {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn extend_from(&mut self, other: &WatermarkSequence) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Normalised bipolar correlation in [−1, 1].
    pub fn correlation(&self, other: &WatermarkSequence) -> f64 {
        let n = self.len().min(other.len());
        if n == 0 {
            return 0.0;
        }
        let agree = self.bits[..n]
            .iter()
            .zip(&other.bits[..n])
            .filter(|(a, b)| a == b)
            .count();
        (2.0 * agree as f64 - n as f64) / n as f64
    }
}

impl FromIterator<bool> for WatermarkSequence {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

fn keystream_bits(seed: u64, stream: u64, n: usize) -> WatermarkSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word = rng.next_u32();
        let take = (n - bits.len()).min(32);
        bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
    }
    WatermarkSequence { bits }
}

/// The first `n` bits of the keyed stream for `key`.
pub fn gen_sequence(key: WatermarkKey, n: usize) -> WatermarkSequence {
    keystream_bits(key.seed, key.block_index, n)
}

/// An unkeyed candidate for detection trials, independent of every
/// watermark stream derived from a different `trial_seed`.
pub fn random_sequence(trial_seed: u64, index: usize, n: usize) -> WatermarkSequence {
    const TRIAL_DOMAIN: u64 = 0x7472_6961_6c73_2d30;
    keystream_bits(trial_seed ^ TRIAL_DOMAIN, index as u64, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_sequence() {
        assert!(gen_sequence(WatermarkKey::new(1, 0), 0).is_empty());
    }

    #[test]
    fn prefix_property_example() {
        let key = WatermarkKey::new(42, 3);
        let short = gen_sequence(key, 100);
        let long = gen_sequence(key, 164);
        assert_eq!(short.bits(), &long.bits()[..100]);
    }

    #[test]
    fn distinct_seeds_are_uncorrelated() {
        let a = gen_sequence(WatermarkKey::new(1, 0), 4096);
        let b = gen_sequence(WatermarkKey::new(2, 0), 4096);
        // binomial: σ of the correlation is 1/64, so 0.1 is > 6σ
        assert!(a.correlation(&b).abs() < 0.1);
        let c = gen_sequence(WatermarkKey::new(1, 1), 4096);
        assert!(a.correlation(&c).abs() < 0.1);
        let balance = a.count_ones() as f64 / 4096.0;
        assert!((balance - 0.5).abs() < 0.05);
    }

    #[test]
    fn trial_candidates_differ_from_keyed_stream() {
        let key = gen_sequence(WatermarkKey::new(9, 0), 2048);
        let trial = random_sequence(9, 0, 2048);
        assert!(key.correlation(&trial).abs() < 0.15);
    }

    #[test]
    fn negation_flips_correlation() {
        let a = gen_sequence(WatermarkKey::new(5, 5), 300);
        assert_eq!(a.correlation(&a), 1.0);
        assert_eq!(a.correlation(&a.negated()), -1.0);
    }

    proptest! {
        #[test]
        fn prefix_stable(seed in any::<u64>(), block in 0usize..1024, n in 0usize..300, extra in 1usize..200) {
            let key = WatermarkKey::new(seed, block);
            let a = gen_sequence(key, n);
            let b = gen_sequence(key, n + extra);
            prop_assert_eq!(a.bits(), &b.bits()[..n]);
        }
    }
}
