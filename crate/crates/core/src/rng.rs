//! Seed expansion. Every random consumer draws from its own ChaCha stream
//! derived from one user seed, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purposes that get disjoint stream ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Domain {
    Learning = 1,
    Probes = 2,
    Budgets = 3,
    Noise = 4,
    MSamples = 5,
    Spsa = 6,
    NormalAgents = 7,
    Experiment = 8,
}

/// Independent stream `index` within `domain` for `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) ^ (index & 0x0000_ffff_ffff_ffff));
    rng
}

/// Child seed for sub-experiment `index` (e.g. one Monte Carlo repetition),
/// itself expanded with [`stream`] by the callee.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::Rng;
    stream(seed, domain, index).random()
}

/// Stream index for a `(run, agent)` pair.
#[inline]
pub fn run_agent_index(run: u64, agent: usize) -> u64 {
    (run << 16) | agent as u64
}
