use cbd_core::corpus::{self, random, CyclicSpec};
use cbd_core::rational::one;
use cbd_core::{CCSystem, Distribution};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Cyclic system of the given rank; perfectly correlated unless seeded.
    Cyclic,
    /// CEA-18 structure with one-hot bunches unless seeded.
    Cea18,
    /// Rank-4 cycle with three correlated bunches and one anticorrelated.
    Prbox,
    /// Three contexts over four contents; independent uniform unless seeded.
    RexShape,
    /// Three-valued connection with no multimaximal coupling.
    Example1,
    /// Six-valued connection that lumps to `example1`.
    Example2,
}

pub fn generate(kind: Kind, rank: usize, seed: Option<u64>) -> Result<CCSystem, CliError> {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let system = match (kind, rng.as_mut()) {
        (Kind::Cyclic, None) => {
            corpus::cyclic_skeleton(rank)?;
            corpus::gen_cyclic(&CyclicSpec { bunches: vec![corpus::correlated_pair(&one()); rank] })?
        }
        (Kind::Cyclic, Some(rng)) => random::random_binary_system(rng, &corpus::cyclic_skeleton(rank)?),
        (Kind::Cea18, None) => corpus::cea18_one_hot(),
        (Kind::Cea18, Some(rng)) => random::random_binary_system(rng, &corpus::gen_cea18()),
        (Kind::Prbox, _) => corpus::pr_box(),
        (Kind::RexShape, None) => {
            let skeleton = corpus::rex_skeleton();
            let dists = skeleton.contexts.iter().map(|(_, qs)| Distribution::uniform(vec![2; qs.len()])).collect();
            skeleton.fill_binary(dists)?
        }
        (Kind::RexShape, Some(rng)) => random::random_binary_system(rng, &corpus::rex_skeleton()),
        (Kind::Example1, _) => corpus::example1(),
        (Kind::Example2, _) => corpus::example2(),
    };
    Ok(system)
}
