//! Reproducible random streams.
//!
//! Every stream is identified by a 64-bit seed and a purpose label. The pair is
//! mixed into a ChaCha8 key, so two streams with the same `(seed, label)` emit
//! bit-identical sequences on every platform, and streams with different labels
//! are independent for all practical purposes.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Label of the stream that feeds the coloring/pruning uniforms `U_i`.
pub const UNIFORMS: &str = "uniforms";
/// Label of the stream that drives Marchal's edge/vertex selection.
pub const SELECTION: &str = "selection";

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a, stable across platforms and toolchains.
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of replica `replica` for the stream `label`, derived from a master seed.
pub fn derive_seed(master: u64, replica: u64, label: &str) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ replica.wrapping_mul(0xd1b5_4a32_d192_ed03));
    splitmix64(b ^ label_hash(label))
}

/// Seed of replica `replica` of an experiment. Each replica then opens its
/// streams with [`RngStream::new`] and the stream labels.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    derive_seed(master, replica, "replica")
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    counter: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let key = splitmix64(seed ^ label_hash(label));
        let mut bytes = [0u8; 32];
        let mut k = key;
        for chunk in bytes.chunks_mut(8) {
            k = splitmix64(k);
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        RngStream {
            seed,
            label: label.to_string(),
            counter: 0,
            inner: ChaCha8Rng::from_seed(bytes),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of 64-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        bits as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`. Used for the `U_i <= p` acceptance rule so that
    /// `p = 0` never accepts and `p = 1` always does.
    pub fn acceptance_uniform(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform in `[0, bound)`.
    pub fn below(&mut self, bound: f64) -> f64 {
        self.uniform() * bound
    }

    pub fn index_below(&mut self, bound: usize) -> usize {
        self.counter += 1;
        self.inner.random_range(0..bound)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.counter += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.counter += 1;
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_label_reproduce() {
        let mut a = RngStream::new(7, UNIFORMS);
        let mut b = RngStream::new(7, UNIFORMS);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        assert_eq!(a.counter(), 100);
    }

    #[test]
    fn labels_separate_streams() {
        let mut a = RngStream::new(7, UNIFORMS);
        let mut b = RngStream::new(7, SELECTION);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn replica_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..10_000 {
            assert!(seen.insert(derive_seed(42, r, UNIFORMS)));
        }
    }

    #[test]
    fn golden_first_draw() {
        // Pins the stream so a dependency bump that changes the output is noticed.
        let mut s = RngStream::new(1, UNIFORMS);
        assert_eq!(s.next_u64(), 6_357_786_589_531_321_147);
    }

    #[test]
    fn acceptance_uniform_is_left_open() {
        let mut s = RngStream::new(3, UNIFORMS);
        for _ in 0..10_000 {
            let u = s.acceptance_uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
