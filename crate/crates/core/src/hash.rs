//! Seeded flow hashing shared by the update and estimate paths.
//!
//! Every minor cycle gets its own hash function `H_m(f) = reduce(fmix64(f ^ seed_m), W)`
//! where `seed_m` is derived from a base seed and the global minor-cycle number.
//! The reduction is a multiply-shift range map, unbiased for any `W`.

use std::hash::{BuildHasherDefault, Hasher};

use crate::model::FlowId;

/// Finalizer of MurmurHash3 (64-bit).
#[inline]
pub fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps a 64-bit hash uniformly onto `0..width`.
#[inline]
pub fn reduce(hash: u64, width: usize) -> usize {
    ((u128::from(hash) * width as u128) >> 64) as usize
}

/// Base seed from which the per-minor-cycle hash functions are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashSeed {
    pub base_seed: u64,
}

impl HashSeed {
    pub fn new(base_seed: u64) -> Self {
        HashSeed { base_seed }
    }

    /// Seed of the hash function used in global minor cycle `minor_global`
    /// (`j * Z + k`).
    #[inline]
    pub fn for_minor(&self, minor_global: u64) -> MinorSeed {
        MinorSeed(splitmix64(self.base_seed ^ splitmix64(minor_global)))
    }
}

/// The derived seed of a single minor cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MinorSeed(pub u64);

#[inline]
pub fn hash_flow(seed: MinorSeed, flow: FlowId, width: usize) -> usize {
    debug_assert!(width >= 1);
    reduce(fmix64(flow.0 ^ seed.0), width)
}

/// Hasher for maps keyed by flow id: one multiply-xorshift round over the
/// 64-bit key. Flow ids from synthetic traces are sequential, so the key must
/// be mixed before the table uses its low bits.
#[derive(Default, Clone, Copy)]
pub struct FlowIdHasher(u64);

impl Hasher for FlowIdHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ u64::from(b)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
    }

    #[inline]
    fn write_u64(&mut self, v: u64) {
        let x = (v ^ self.0).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        self.0 = x ^ (x >> 29);
    }
}

pub type FlowBuildHasher = BuildHasherDefault<FlowIdHasher>;
pub type FlowMap<V> = std::collections::HashMap<FlowId, V, FlowBuildHasher>;
pub type FlowSet = std::collections::HashSet<FlowId, FlowBuildHasher>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let s = HashSeed::new(42).for_minor(7);
        assert_eq!(
            hash_flow(s, FlowId(99), 1000),
            hash_flow(s, FlowId(99), 1000)
        );
    }

    #[test]
    fn width_one_maps_to_zero() {
        let seed = HashSeed::new(3);
        for m in 0..10 {
            for f in 0..100 {
                assert_eq!(hash_flow(seed.for_minor(m), FlowId(f), 1), 0);
            }
        }
    }

    #[test]
    fn seeds_differ_across_minor_cycles() {
        let seed = HashSeed::new(0xabc);
        let mut seen = std::collections::HashSet::new();
        for m in 0..100_000 {
            assert!(seen.insert(seed.for_minor(m)));
        }
    }

    #[test]
    fn reduce_covers_full_range() {
        assert_eq!(reduce(0, 10), 0);
        assert_eq!(reduce(u64::MAX, 10), 9);
        assert_eq!(reduce(u64::MAX, 1), 0);
    }

    /// Chi-square of 10^6 sequential flow ids over 1024 buckets. The 99.9%
    /// quantile of chi2(1023) is about 1175; the statistic observed for this
    /// hash and seed is frozen as a regression value.
    #[test]
    fn chi_square_uniformity_regression() {
        const W: usize = 1024;
        const FLOWS: u64 = 1_000_000;
        let seed = HashSeed::new(0x5eed_1f7b_0c4a_9d21).for_minor(12345);
        let mut buckets = vec![0u64; W];
        for f in 0..FLOWS {
            buckets[hash_flow(seed, FlowId(f), W)] += 1;
        }
        let expected = FLOWS as f64 / W as f64;
        let chi2: f64 = buckets
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 1175.0, "chi2 = {chi2}");
        assert!((chi2 - CHI2_FROZEN).abs() < 1e-6, "chi2 = {chi2}");
    }

    const CHI2_FROZEN: f64 = 1065.037824;

    #[test]
    fn non_power_of_two_width_is_unbiased() {
        const W: usize = 1000;
        let seed = HashSeed::new(1).for_minor(0);
        let mut buckets = vec![0u32; W];
        for f in 0..500_000u64 {
            buckets[hash_flow(seed, FlowId(f.wrapping_mul(0x1_0000_0001)), W)] += 1;
        }
        let expected = 500.0;
        let chi2: f64 = buckets
            .iter()
            .map(|&c| (f64::from(c) - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of chi2(999) is about 1148.
        assert!(chi2 < 1148.0, "chi2 = {chi2}");
    }
}
