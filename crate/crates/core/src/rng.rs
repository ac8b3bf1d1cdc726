//! Seeding and random variate generation.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] whose
//! 64-bit seed is derived with [`derive_seed`]. Uniform and Gaussian variates
//! are produced by the routines in this module rather than by `rand`'s
//! distribution types, so golden outputs do not depend on the version of the
//! distribution crates.
//!
//! * Uniform `f64`: the top 53 bits of `next_u64`, scaled by 2^-53, giving a
//!   value on the lattice `k * 2^-53` in `[0, 1)`.
//! * Gaussian: Marsaglia's polar method. Pairs `(v1, v2)` uniform on
//!   `(-1, 1)^2` are rejected unless `0 < s = v1^2 + v2^2 < 1`; both
//!   `v1 * m` and `v2 * m` with `m = sqrt(-2 ln s / s)` are emitted, the
//!   first before the second.
//!
//! Sub-seeds are `derive_seed(master, tag, a, b)`:
//!
//! ```text
//! h = splitmix64(master ^ splitmix64(tag))
//! h = splitmix64(h ^ a)
//! h = splitmix64(h ^ b)
//! ```
//!
//! where `splitmix64(z)` adds the golden gamma `0x9E3779B97F4A7C15` and
//! applies the standard SplitMix64 finalizer. `tag` separates experiment
//! kinds and uses; `a` and `b` are typically a parameter-point index and a
//! trial index.

use rand::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

/// Stream tags used when deriving sub-seeds.
pub mod tags {
    pub const NOISE: u64 = 0x6e6f697365;
    pub const THETA_GRID: u64 = 0x7468657461;
    pub const STATIONARY: u64 = 0x7374617469;
    pub const CODEBOOK: u64 = 0x636f6465;
    pub const SCHEME: u64 = 0x736368656d65;
    pub const BITS: u64 = 0x62697473;
    pub const SWEEP: u64 = 0x7377656570;
    pub const LYAPUNOV: u64 = 0x6c79617075;
    pub const ENTROPY: u64 = 0x656e74726f;
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step: adds the golden gamma and applies the finalizer.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a master seed, a stream tag and two indices.
pub fn derive_seed(master: u64, tag: u64, a: u64, b: u64) -> u64 {
    let h = splitmix64(master ^ splitmix64(tag));
    let h = splitmix64(h ^ a);
    splitmix64(h ^ b)
}

/// Generator seeded from a derived 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform variate on the 2^-53 lattice in `[0, 1)`.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal source using the polar method with a one-value cache.
#[derive(Debug, Clone)]
pub struct Gaussian<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Gaussian<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let v1 = 2.0 * uniform(&mut self.rng) - 1.0;
            let v2 = 2.0 * uniform(&mut self.rng) - 1.0;
            let s = v1 * v1 + v2 * v2;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v2 * m);
                return v1 * m;
            }
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}
