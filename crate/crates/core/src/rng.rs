//! Deterministic randomness used for corpus splits, subsets, and corruption.
//!
//! Everything here is pinned to SplitMix64 (Steele, Lea & Flood 2014) so that
//! shuffles and corruption draws reproduce bit-for-bit across platforms and
//! releases. The generator state advances by the 64-bit golden ratio constant
//! and finishes with the variant-13 avalanche mix.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix of one 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 sequential generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform draw from `0..bound` by unbiased modulo rejection.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let r = self.next_u64();
            if r <= zone {
                return r % bound;
            }
        }
    }

    /// Uniform draw from the unit interval using the top 53 bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// In-place Fisher-Yates shuffle driven by a fresh SplitMix64 stream.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = SplitMix64::new(seed);
    for j in (1..items.len()).rev() {
        let k = rng.next_below(j as u64 + 1) as usize;
        items.swap(j, k);
    }
}

/// Counter-based unit draw keyed by (seed, line index, site index).
///
/// Each key maps independently through the avalanche mix, so corrupting lines
/// in any order, or skipping lines, yields the same draw for a given site.
pub fn site_unit(seed: u64, line: u64, site: u64) -> f64 {
    let z = mix64(mix64(mix64(seed).wrapping_add(line)).wrapping_add(site));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
