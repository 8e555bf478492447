//! Slow reference implementations and data generators used by the starmsa
//! test suites. Nothing here shares code with the library paths it checks.

pub mod gen;
pub mod oracle;

pub use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for a test case.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
