//! Parallel trial driver.

use rayon::prelude::*;

use crate::estimate::Accumulator;
use crate::rng::SeedSpec;

/// Trials handed to one rayon task; each task owns its scratch state.
const CHUNK: u64 = 64;

/// Run trials `0..trials` of experiment `seed`, folding the per-trial
/// accumulators. The result does not depend on the number of threads.
pub fn run_trials<A, S, F>(trials: u64, seed: u64, f: F) -> A
where
    A: Accumulator,
    S: Default,
    F: Fn(SeedSpec, &mut S) -> A + Sync,
{
    run_trial_range(0, trials, seed, f)
}

/// Run trials `first..first + count` of experiment `seed`.
pub fn run_trial_range<A, S, F>(first: u64, count: u64, seed: u64, f: F) -> A
where
    A: Accumulator,
    S: Default,
    F: Fn(SeedSpec, &mut S) -> A + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = S::default();
            let mut acc = A::default();
            let lo = first + c * CHUNK;
            let hi = (lo + CHUNK).min(first + count);
            for t in lo..hi {
                acc.merge(f(SeedSpec::new(seed, t), &mut scratch));
            }
            acc
        })
        .reduce(A::default, |mut a, b| {
            a.merge(b);
            a
        })
}
