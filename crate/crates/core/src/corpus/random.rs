//! Random systems for property tests and benchmarks.
//!
//! Every generator takes the caller's RNG, so seeded runs are reproducible.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::Skeleton;
use crate::model::{outcomes, CCSystem, Connection, ContentId, Distribution, Outcome, ValueSet};
use crate::rational::Rational;

/// Uniform-ish rational in `[0, 1]` with denominator at most `max_denom`.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, max_denom: i64) -> Rational {
    let d = rng.gen_range(1..=max_denom);
    Rational::new(rng.gen_range(0..=d).into(), d.into())
}

/// Binary connection of `k` cells with `Pr[first value]` of denominator ≤ `max_denom`.
pub fn random_binary_connection<R: Rng + ?Sized>(rng: &mut R, k: usize, max_denom: i64) -> Connection {
    let p: Vec<Rational> = (0..k).map(|_| random_probability(rng, max_denom)).collect();
    Connection::binary("q", &p).expect("probabilities lie in [0, 1]")
}

/// Categorical connection of `k` cells over `m` values; masses are integer
/// weights normalized, some of them zero.
pub fn random_connection<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize) -> Connection {
    let labels: Vec<String> = (1..=m).map(|v| v.to_string()).collect();
    let marginals = (0..k).map(|_| random_distribution(rng, vec![m], 4)).collect();
    Connection::new("q", ValueSet::new(labels).expect("distinct"), marginals).expect("shapes match")
}

/// Integer weights in `0..=max_weight` per outcome, normalized; never all zero.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, shape: Vec<usize>, max_weight: i64) -> Distribution {
    let all: Vec<Outcome> = outcomes(&shape).collect();
    let mut weights: Vec<i64> = all.iter().map(|_| rng.gen_range(0..=max_weight)).collect();
    if weights.iter().all(|&w| w == 0) {
        let i = rng.gen_range(0..weights.len());
        weights[i] = 1;
    }
    let total: i64 = weights.iter().sum();
    Distribution::new(shape, all.into_iter().zip(weights).map(|(o, w)| (o, Rational::new(w.into(), total.into()))))
        .expect("normalized by construction")
}

/// Binary system with independent random bunches; typically inconsistently
/// connected and often contextual.
pub fn random_binary_system<R: Rng + ?Sized>(rng: &mut R, skeleton: &Skeleton) -> CCSystem {
    let dists = skeleton.contexts.iter().map(|(_, qs)| random_distribution(rng, vec![2; qs.len()], 3)).collect();
    skeleton.fill_binary(dists).expect("valid skeleton")
}

/// Noncontextual binary system from a shared hidden variable.
///
/// Each content `q` has a hidden level `λ_q ∈ {0..levels-1}` and each cell a
/// threshold `t`; the variable takes the first value iff `λ_q < t`. Within a
/// connection the variables are monotone in one `λ_q`, which is exactly the
/// staircase coupling, and the joint law of the `λ`s couples all bunches.
pub fn random_noncontextual_binary<R: Rng + ?Sized>(rng: &mut R, skeleton: &Skeleton, levels: usize) -> CCSystem {
    let n = skeleton.contents.len();
    let index: BTreeMap<&ContentId, usize> = skeleton.contents.iter().enumerate().map(|(i, q)| (q, i)).collect();
    let support = rng.gen_range(1..=4);
    let hidden: Vec<(Vec<usize>, i64)> = (0..support)
        .map(|_| ((0..n).map(|_| rng.gen_range(0..levels)).collect(), rng.gen_range(1..=4)))
        .collect();
    let total: i64 = hidden.iter().map(|(_, w)| w).sum();
    let dists = skeleton
        .contexts
        .iter()
        .map(|(_, qs)| {
            let thresholds: Vec<usize> = qs.iter().map(|_| rng.gen_range(0..=levels)).collect();
            let mut masses: BTreeMap<Outcome, Rational> = BTreeMap::new();
            for (lambda, w) in &hidden {
                let o: Outcome =
                    qs.iter().zip(&thresholds).map(|(q, &t)| usize::from(lambda[index[q]] >= t)).collect();
                *masses.entry(o).or_default() += Rational::new((*w).into(), total.into());
            }
            Distribution::new(vec![2; qs.len()], masses).expect("normalized")
        })
        .collect();
    skeleton.fill_binary(dists).expect("valid skeleton")
}

/// Consistently connected system with `values[q]` values per content.
///
/// Every content gets a random marginal on a grid of `grid` equal masses.
/// Each bunch draws a single uniform `U` on the grid and reads each variable
/// through its own random permutation of the grid, so bunch marginals agree
/// with the content marginal while bunches are correlated arbitrarily.
pub fn random_consistent<R: Rng + ?Sized>(
    rng: &mut R,
    skeleton: &Skeleton,
    values: &BTreeMap<ContentId, usize>,
    grid: usize,
) -> CCSystem {
    // cut[q][g] = value taken at grid point g before permuting
    let cut: BTreeMap<&ContentId, Vec<usize>> = skeleton
        .contents
        .iter()
        .map(|q| {
            let m = values[q];
            let mut points: Vec<usize> = (0..grid).map(|_| rng.gen_range(0..m)).collect();
            points.sort_unstable();
            (q, points)
        })
        .collect();
    let dists = skeleton
        .contexts
        .iter()
        .map(|(_, qs)| {
            let perms: Vec<Vec<usize>> = qs
                .iter()
                .map(|_| {
                    let mut p: Vec<usize> = (0..grid).collect();
                    p.shuffle(rng);
                    p
                })
                .collect();
            let mut masses: BTreeMap<Outcome, Rational> = BTreeMap::new();
            for u in 0..grid {
                let o: Outcome = qs.iter().zip(&perms).map(|(q, p)| cut[q][p[u]]).collect();
                *masses.entry(o).or_default() += Rational::new(1.into(), grid.into());
            }
            Distribution::new(qs.iter().map(|q| values[q]).collect(), masses).expect("normalized")
        })
        .collect();
    let value_sets = skeleton
        .contents
        .iter()
        .map(|q| (q.clone(), ValueSet::new((1..=values[q]).map(|v| v.to_string())).expect("distinct")))
        .collect();
    skeleton.fill(value_sets, dists).expect("valid skeleton")
}

/// [`random_consistent`] with every content binary.
pub fn random_consistent_binary<R: Rng + ?Sized>(rng: &mut R, skeleton: &Skeleton, grid: usize) -> CCSystem {
    let values = skeleton.contents.iter().map(|q| (q.clone(), 2)).collect();
    random_consistent(rng, skeleton, &values, grid)
}
