//! Deterministic randomness shared by the perturbation, the initial weight
//! draw and the generators.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids keep independent consumers of one seed from sharing draws.
pub(crate) const STREAM_PERTURB: u64 = 1;
pub(crate) const STREAM_WEIGHTS: u64 = 2;
pub(crate) const STREAM_GENERATOR: u64 = 3;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The first `count` primes.
pub(crate) fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// `count` distinct primes in a seed-dependent order, drawn from a pool twice
/// as large as needed.
pub(crate) fn shuffled_primes(rng: &mut ChaCha8Rng, count: usize) -> Vec<u64> {
    let mut pool = first_primes((2 * count).max(16));
    pool.shuffle(rng);
    pool.truncate(count);
    pool
}
