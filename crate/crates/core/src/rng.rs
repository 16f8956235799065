//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so results
//! do not depend on evaluation order or thread count and can be reproduced
//! by any implementation that follows the recipe below.
//!
//! ```text
//! key      = mix(seed XOR mix(stream + STREAM_SALT))
//! word(c)  = mix(key + (c + 1) * GOLDEN_GAMMA)          (wrapping u64)
//! mix(z)   : z = (z ^ (z >> 30)) * MIX1
//!            z = (z ^ (z >> 27)) * MIX2
//!            z ^ (z >> 31)
//! uniform  = (word >> 11) * 2^-53                        in [0, 1)
//! normal(c)= sqrt(-2 ln(1 - uniform(2c))) * cos(2 pi uniform(2c + 1))
//! ```
//!
//! `ln` and `cos` come from `libm` so the stream is bit-identical across
//! platforms.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
pub const MIX2: u64 = 0x94D0_49BB_1331_11EB;
pub const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// One independent substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix64(seed ^ mix64(stream.wrapping_add(STREAM_SALT))),
        }
    }

    #[inline]
    pub fn word(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.word(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on words `2c` and `2c + 1`.
    #[inline]
    pub fn normal(&self, counter: u64) -> f64 {
        let u1 = 1.0 - self.uniform(counter.wrapping_mul(2));
        let u2 = self.uniform(counter.wrapping_mul(2).wrapping_add(1));
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
    }
}
