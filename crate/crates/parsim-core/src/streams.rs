//! Deterministic RNG stream derivation.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! `(master seed, lane, trial)`, so trials are independent, reproducible and
//! insensitive to how other components consume randomness.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent consumers of randomness inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Process and measurement noise (w, v).
    Plant,
    /// Attacker initialization and noise (z, w_a).
    Attacker,
    /// Watermark draws (e).
    Watermark,
    /// Attack-onset sampling and other per-trial scalars.
    AttackTime,
    /// Context-library harvesting for the policy sampler.
    Context,
    /// Frozen transition samples for value iteration.
    Transition,
}

impl Lane {
    fn id(self) -> u64 {
        match self {
            Lane::Plant => 1,
            Lane::Attacker => 2,
            Lane::Watermark => 3,
            Lane::AttackTime => 4,
            Lane::Context => 5,
            Lane::Transition => 6,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha stream for `(master, lane, trial)`.
pub fn stream(master: u64, lane: Lane, trial: u64) -> ChaCha12Rng {
    let mut state = master ^ lane.id().rotate_left(24) ^ trial.rotate_left(48);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
