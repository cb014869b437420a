mod common;

use cbd_core::corpus::{self, random};
use cbd_core::coupling::{
    enumerate_multimaximal, is_multimaximal, is_multimaximal_consecutive, max_pair_probability, multimaximal_binary,
    multimaximal_exists, CouplingDistribution, MultimaximalOutcome,
};
use cbd_core::rational::{rat, Rational};
use cbd_core::{AnalysisOptions, Connection, ContentId, Distribution, SolveMode};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

fn example_connection(sys: &cbd_core::CCSystem) -> Connection {
    sys.connection_of(&ContentId::new("q")).unwrap()
}

/// `Σ_v min_i m_i(v)` written out over dense vectors.
fn oracle_all_equal_max(conn: &Connection, subset: &[usize]) -> Rational {
    let dense: Vec<Vec<Rational>> = subset.iter().map(|&i| conn.marginals[i].dense()).collect();
    (0..conn.value_set.len()).map(|v| dense.iter().map(|d| d[v].clone()).min().unwrap()).sum()
}

fn subsets(k: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << k)).map(move |mask| (0..k).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
}

#[test]
fn example1_has_no_multimaximal_coupling() {
    let conn = example_connection(&corpus::example1());
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert_eq!(max_pair_probability(&conn.marginals[i], &conn.marginals[j]).unwrap(), rat(1, 2));
    }
    for mode in [SolveMode::Exact, SolveMode::FloatThenVerify] {
        match multimaximal_exists(&conn, &AnalysisOptions { mode, ..opts() }).unwrap() {
            MultimaximalOutcome::Impossible(cert) => {
                assert!(cert.verify());
                assert_eq!(cert.program.num_vars, 27);
                assert!(!cert.rows().is_empty());
            }
            MultimaximalOutcome::Exists(c) => panic!("found {c:?}"),
        }
    }
    assert!(enumerate_multimaximal(&conn, 5, &opts()).unwrap().is_empty());
}

#[test]
fn example2_displayed_couplings() {
    let conn = example_connection(&corpus::example2());
    for d in corpus::example2_couplings() {
        let c = CouplingDistribution { cells: conn.cells.clone(), value_set: conn.value_set.clone(), dist: d };
        let report = is_multimaximal(&c, &conn).unwrap();
        assert!(report.is_multimaximal());
        assert!(report.pairs.iter().all(|p| p.maximum.is_zero()));
    }
    let MultimaximalOutcome::Exists(w) = multimaximal_exists(&conn, &opts()).unwrap() else { panic!() };
    assert!(is_multimaximal(&w, &conn).unwrap().is_multimaximal());

    let found = enumerate_multimaximal(&conn, 50, &opts()).unwrap();
    assert!(found.len() >= 2);
    for d in corpus::example2_couplings() {
        assert!(found.iter().any(|c| c.dist == d), "missing {d:?}");
    }
}

#[test]
fn independent_coupling_is_not_maximal() {
    let conn = Connection::binary("q", &[rat(1, 2), rat(1, 2)]).unwrap();
    let c = CouplingDistribution {
        cells: conn.cells.clone(),
        value_set: conn.value_set.clone(),
        dist: Distribution::uniform(vec![2, 2]),
    };
    assert!(!is_multimaximal(&c, &conn).unwrap().is_multimaximal());
}

#[test]
fn marginal_mismatch_is_an_error() {
    let conn = Connection::binary("q", &[rat(1, 3), rat(1, 2)]).unwrap();
    let c = CouplingDistribution {
        cells: conn.cells.clone(),
        value_set: conn.value_set.clone(),
        dist: Distribution::uniform(vec![2, 2]),
    };
    assert!(is_multimaximal(&c, &conn).is_err());
}

#[test]
fn binary_connection_has_one_vertex() {
    let conn = Connection::binary("q", &[rat(1, 4), rat(3, 4)]).unwrap();
    let found = enumerate_multimaximal(&conn, 10, &opts()).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0], multimaximal_binary(&conn).unwrap());
}

/// Independent coupling mixed with the staircase: `t·T + (1 - t)·product`.
fn mixture(conn: &Connection, t: &Rational) -> CouplingDistribution {
    let stair = multimaximal_binary(conn).unwrap();
    let product = conn.marginals[1..].iter().fold(conn.marginals[0].clone(), |acc, m| acc.product(m));
    let k = conn.len();
    let entries = cbd_core::model::outcomes(&vec![2; k])
        .map(|o| {
            let m = t * stair.dist.mass(&o) + (Rational::one() - t) * product.mass(&o);
            (o, m)
        })
        .collect::<Vec<_>>();
    CouplingDistribution { dist: Distribution::new(vec![2; k], entries).unwrap(), ..stair }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn staircase_is_the_unique_lp_point(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(2..=6);
        let conn = random::random_binary_connection(&mut rng, k, 64);
        let stair = multimaximal_binary(&conn).unwrap();

        let MultimaximalOutcome::Exists(lp) = multimaximal_exists(&conn, &opts()).unwrap() else {
            panic!("binary connections always have a multimaximal coupling");
        };
        prop_assert_eq!(&lp, &stair);
        // Minimizing and maximizing every outcome mass never leaves the point.
        if k <= 4 {
            let vertices = enumerate_multimaximal(&conn, usize::MAX, &opts()).unwrap();
            prop_assert_eq!(vertices.len(), 1);
        }

        // Theorem 1 identities after sorting: Pr[all of S take value 1] = min p, value 2 → 1 - max p.
        let p = conn.first_value_probabilities();
        for s in subsets(k) {
            let pr_first: Rational = stair.dist.iter().filter(|(o, _)| s.iter().all(|&i| o[i] == 0)).map(|(_, m)| m.clone()).sum();
            let pr_second: Rational = stair.dist.iter().filter(|(o, _)| s.iter().all(|&i| o[i] == 1)).map(|(_, m)| m.clone()).sum();
            let min_p = s.iter().map(|&i| p[i].clone()).min().unwrap();
            let max_p = s.iter().map(|&i| p[i].clone()).max().unwrap();
            prop_assert_eq!(pr_first, min_p);
            prop_assert_eq!(pr_second, Rational::one() - max_p);
            prop_assert_eq!(stair.all_equal_probability(&s), oracle_all_equal_max(&conn, &s));
        }
        for (i, m) in conn.marginals.iter().enumerate() {
            prop_assert_eq!(&stair.dist.marginal(&[i]).unwrap(), m);
        }
    }

    #[test]
    fn all_pairs_iff_consecutive_pairs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(2..=5);
        let conn = random::random_binary_connection(&mut rng, k, 64);
        for t in [rat(0, 1), rat(1, 2), rat(1, 1)] {
            let c = mixture(&conn, &t);
            let all = is_multimaximal(&c, &conn).unwrap().is_multimaximal();
            let consecutive = is_multimaximal_consecutive(&c, &conn).unwrap().is_multimaximal();
            prop_assert_eq!(all, consecutive);
            if t.is_one() {
                prop_assert!(all);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn pairwise_maximal_couplings_are_subset_maximal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(2..=4);
        let m = rng.gen_range(2..=3);
        let conn = random::random_connection(&mut rng, k, m);
        if let MultimaximalOutcome::Exists(c) = multimaximal_exists(&conn, &opts()).unwrap() {
            for s in subsets(k) {
                prop_assert_eq!(c.all_equal_probability(&s), oracle_all_equal_max(&conn, &s));
            }
        }
    }

    #[test]
    fn nonexistence_agrees_with_vertex_oracle(seed in any::<u64>()) {
        // Two-point supports over three values: the Example 1 regime, small enough to enumerate.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let marginals = (0..3)
            .map(|_| {
                let hole = rng.gen_range(0..3);
                let a = random::random_probability(&mut rng, 8);
                let masses = (0..3)
                    .map(|v| match (v == hole, v == (hole + 1) % 3) {
                        (true, _) => Rational::zero(),
                        (false, true) => a.clone(),
                        (false, false) => Rational::one() - &a,
                    })
                    .collect();
                Distribution::univariate(masses).unwrap()
            })
            .collect();
        let conn = Connection::new("q", cbd_core::ValueSet::new(["1", "2", "3"]).unwrap(), marginals).unwrap();
        let program = cbd_core::coupling::multimaximal_program(&conn, 1 << 10).unwrap();
        let (a, b) = dense(&program);
        // Outcomes outside the marginal supports are forced to zero; drop them to keep the oracle small.
        let supports: Vec<Vec<usize>> = (0..3).map(|i| conn.support_of(i)).collect();
        let keep: Vec<usize> = cbd_core::model::outcomes(&[3, 3, 3])
            .enumerate()
            .filter(|(_, o)| o.iter().zip(&supports).all(|(v, s)| s.contains(v)))
            .map(|(x, _)| x)
            .collect();
        let a_kept: Vec<Vec<Rational>> = a.iter().map(|row| keep.iter().map(|&x| row[x].clone()).collect()).collect();
        let oracle = common::nonnegative_solution(&a_kept, &b).is_some();
        let exists = matches!(multimaximal_exists(&conn, &opts()).unwrap(), MultimaximalOutcome::Exists(_));
        prop_assert_eq!(exists, oracle);
    }
}

fn dense(lp: &cbd_core::LinearProgram) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let a = lp
        .constraints
        .iter()
        .map(|c| {
            let mut row = vec![Rational::zero(); lp.num_vars];
            for (j, v) in &c.terms {
                row[*j] += v;
            }
            row
        })
        .collect();
    (a, lp.constraints.iter().map(|c| c.rhs.clone()).collect())
}
