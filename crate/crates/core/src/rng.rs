//! Seed derivation for reproducible, parallel Monte Carlo runs.
//!
//! Each trial gets its own ChaCha8 stream (`master_seed`, stream = trial
//! index), from which the per-trial data and SPS seeds are drawn, so trial
//! `k` is identical no matter how many trials run or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub data: u64,
    pub sps: u64,
    pub block: u64,
}

pub fn trial_seeds(master_seed: u64, trial: u64) -> TrialSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    TrialSeeds { data: rng.next_u64(), sps: rng.next_u64(), block: rng.next_u64() }
}
