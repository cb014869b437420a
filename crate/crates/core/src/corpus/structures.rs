use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{CorpusError, Skeleton};
use crate::model::{Bunch, CCSystem, ContentId, ContextId, Distribution, ValueSet};
use crate::rational::{rat, Rational};

/// Bivariate binary bunch distributions of a cyclic system; bunch `i` is over
/// `(q_i, q_{i+1})` with indices taken cyclically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicSpec {
    pub bunches: Vec<Distribution>,
}

impl CyclicSpec {
    pub fn rank(&self) -> usize {
        self.bunches.len()
    }
}

fn content(i: usize) -> ContentId {
    ContentId::new(format!("q{i}"))
}

fn context(i: usize) -> ContextId {
    ContextId::new(format!("c{i}"))
}

/// Contents `q1..qn`, contexts `c1..cn`, context `c_i` measuring `(q_i, q_{i+1})`.
pub fn cyclic_skeleton(rank: usize) -> Result<Skeleton, CorpusError> {
    if rank < 2 {
        return Err(CorpusError::InvalidRank(rank));
    }
    Ok(Skeleton {
        contents: (1..=rank).map(content).collect(),
        contexts: (1..=rank).map(|i| (context(i), vec![content(i), content(i % rank + 1)])).collect(),
    })
}

pub fn gen_cyclic(spec: &CyclicSpec) -> Result<CCSystem, CorpusError> {
    cyclic_skeleton(spec.rank())?.fill_binary(spec.bunches.clone())
}

/// Two binary variables with uniform marginals and `Pr[equal] = p_equal`.
pub fn correlated_pair(p_equal: &Rational) -> Distribution {
    let half = rat(1, 2);
    let same = p_equal * &half;
    let differ = (Rational::one() - p_equal) * &half;
    Distribution::new(
        vec![2, 2],
        [(vec![0, 0], same.clone()), (vec![0, 1], differ.clone()), (vec![1, 0], differ), (vec![1, 1], same)],
    )
    .expect("valid for 0 <= p_equal <= 1")
}

/// Rank-4 cyclic system with uniform marginals, perfectly correlated in
/// `c1..c3` and perfectly anticorrelated in `c4`.
pub fn pr_box() -> CCSystem {
    let one = Rational::one();
    let zero = Rational::zero();
    let spec = CyclicSpec {
        bunches: vec![correlated_pair(&one), correlated_pair(&one), correlated_pair(&one), correlated_pair(&zero)],
    };
    gen_cyclic(&spec).expect("valid rank-4 system")
}

/// Contents `q1..q4` in contexts `c1 = {q1, q2, q4}`, `c2 = {q1, q3}`, `c3 = {q1, q2, q3, q4}`.
pub fn rex_skeleton() -> Skeleton {
    let qs = |idx: &[usize]| idx.iter().map(|&i| content(i)).collect::<Vec<_>>();
    Skeleton {
        contents: qs(&[1, 2, 3, 4]),
        contexts: vec![(context(1), qs(&[1, 2, 4])), (context(2), qs(&[1, 3])), (context(3), qs(&[1, 2, 3, 4]))],
    }
}

/// Binary system of [`rex_skeleton`] shape with the given bunch distributions.
pub fn gen_rex(dists: Vec<Distribution>) -> Result<CCSystem, CorpusError> {
    rex_skeleton().fill_binary(dists)
}

/// The 18 contents of the Cabello–Estebaranz–Alcaine structure and the two
/// contexts (1-based) measuring each.
pub const CEA18_INCIDENCE: [(&str, [usize; 2]); 18] = [
    ("q0001", [1, 2]),
    ("q0010", [1, 5]),
    ("q1100", [1, 3]),
    ("q1200", [1, 7]),
    ("q0100", [2, 5]),
    ("q1010", [2, 8]),
    ("q1020", [2, 4]),
    ("q1212", [3, 4]),
    ("q1221", [3, 6]),
    ("q0011", [3, 7]),
    ("q1111", [4, 6]),
    ("q0102", [4, 8]),
    ("q1001", [5, 9]),
    ("q1002", [5, 6]),
    ("q0120", [6, 9]),
    ("q1121", [7, 8]),
    ("q1112", [7, 9]),
    ("q2111", [8, 9]),
];

/// 9 contexts of 4 contents each, 18 contents in 2 contexts each.
pub fn gen_cea18() -> Skeleton {
    let contents: Vec<ContentId> = CEA18_INCIDENCE.iter().map(|(q, _)| ContentId::new(*q)).collect();
    let contexts = (1..=9)
        .map(|c| {
            let members =
                CEA18_INCIDENCE.iter().filter(|(_, cs)| cs.contains(&c)).map(|(q, _)| ContentId::new(*q)).collect();
            (context(c), members)
        })
        .collect();
    Skeleton { contents, contexts }
}

/// CEA-18 with every bunch uniform over the four outcomes in which exactly
/// one variable takes the first value.
pub fn cea18_one_hot() -> CCSystem {
    let skeleton = gen_cea18();
    let dists = skeleton
        .contexts
        .iter()
        .map(|(_, qs)| {
            let k = qs.len();
            let entries = (0..k).map(|hot| {
                let o: Vec<usize> = (0..k).map(|i| usize::from(i != hot)).collect();
                (o, rat(1, k as i64))
            });
            Distribution::new(vec![2; k], entries).expect("uniform one-hot")
        })
        .collect();
    skeleton.fill_binary(dists).expect("valid structure")
}

/// One content `q` measured alone in each of `c1..ck`.
fn single_connection(value_set: ValueSet, marginals: &[Vec<Rational>]) -> CCSystem {
    let q = ContentId::new("q");
    let bunches = marginals
        .iter()
        .enumerate()
        .map(|(i, m)| Bunch {
            context: context(i + 1),
            contents: vec![q.clone()],
            dist: Distribution::univariate(m.clone()).expect("valid marginal"),
        })
        .collect();
    let mut value_sets = BTreeMap::new();
    value_sets.insert(q.clone(), value_set);
    CCSystem::new(vec![q], value_sets, bunches).expect("valid fixture")
}

/// Three 3-valued variables whose pairwise maximal couplings are mutually
/// exclusive, so no multimaximal coupling exists.
pub fn example1() -> CCSystem {
    let h = rat(1, 2);
    let z = Rational::zero();
    single_connection(
        ValueSet::new(["1", "2", "3"]).expect("distinct"),
        &[vec![z.clone(), h.clone(), h.clone()], vec![h.clone(), z.clone(), h.clone()], vec![h.clone(), h, z]],
    )
}

/// Values `1, 1', 2, 2', 3, 3'`; lumping `i` with `i'` gives [`example1`].
pub fn example2() -> CCSystem {
    let h = rat(1, 2);
    let z = Rational::zero();
    let at = |a: usize, b: usize| (0..6).map(|v| if v == a || v == b { h.clone() } else { z.clone() }).collect();
    single_connection(
        ValueSet::new(["1", "1'", "2", "2'", "3", "3'"]).expect("distinct"),
        &[at(3, 5), at(1, 4), at(0, 2)],
    )
}

/// The two multimaximal couplings displayed for [`example2`]:
/// `{(2',1',1), (3',3,2)}` and `{(2',3,2), (3',1',1)}`, each with mass 1/2.
pub fn example2_couplings() -> [Distribution; 2] {
    let h = rat(1, 2);
    let d = |a: [usize; 3], b: [usize; 3]| {
        Distribution::new(vec![6; 3], [(a.to_vec(), h.clone()), (b.to_vec(), h.clone())]).expect("valid")
    };
    [d([3, 1, 0], [5, 4, 2]), d([3, 4, 2], [5, 1, 0])]
}
