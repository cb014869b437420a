//! Benchmark fixtures shared by the criterion targets.

use cbd_core::corpus::{self, random, CyclicSpec};
use cbd_core::rational::rat;
use cbd_core::CCSystem;

/// A cyclic system of the given rank whose last bunch is anticorrelated.
pub fn twisted_cycle(rank: usize) -> CCSystem {
    let mut bunches = vec![corpus::correlated_pair(&rat(1, 1)); rank];
    bunches[rank - 1] = corpus::correlated_pair(&rat(0, 1));
    corpus::gen_cyclic(&CyclicSpec { bunches }).expect("rank >= 2")
}

/// Reproducible noncontextual system on the three-context shape.
pub fn noncontextual_rex(seed: u64) -> CCSystem {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random::random_noncontextual_binary(&mut rng, &corpus::rex_skeleton(), 4)
}
