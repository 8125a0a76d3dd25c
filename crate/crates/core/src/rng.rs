use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Random stream used by every stochastic engine in the crate.
pub type SeededRng = ChaCha8Rng;

/// Deterministic, platform-independent stream for a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in `[0, 1)` with 53 bits of resolution.
pub fn uniform_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
