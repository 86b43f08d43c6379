//! Seeded pseudo-random generation for resampling and splitting.
//!
//! The generator is splitmix64: a counter advanced by a fixed odd constant,
//! mixed through two xor-shift-multiply rounds. Every sampling decision in
//! this crate flows through it, so any (inputs, seed) pair replays exactly.

/// Weyl increment for the splitmix64 counter (golden-ratio constant).
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n), unbiased via rejection.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below: empty range");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }
}

/// Derive an independent stream seed from a base seed and a salt.
///
/// Used when one logical seed fans out into several sampling tasks
/// (one per resampling target, per repeat, ...).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    mix(seed ^ mix(salt.wrapping_mul(GAMMA).wrapping_add(GAMMA)))
}
