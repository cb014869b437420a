//! Maximal and multimaximal couplings of a single connection.
//!
//! For binary connections the multimaximal coupling is unique and has a
//! closed "staircase" form ([`multimaximal_binary`]). For larger value sets
//! it may be missing or non-unique, so [`multimaximal_exists`] and
//! [`enumerate_multimaximal`] work on the LP whose constraints fix every
//! univariate marginal and every pairwise probability of equality at its
//! maximum. Pairwise constraints are enough: a coupling maximal on every pair
//! is maximal on every subset.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::lp::{self, Constraint, FarkasCertificate, LinearProgram, Relation, Status};
use crate::model::{distribution_json, outcomes, Cell, ContentId, Connection, Distribution, Outcome, ValueSet};
use crate::rational::{min_ref, Rational};
use crate::{AnalysisOptions, TooLarge};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CouplingError {
    #[error("connection {0} is not binary")]
    NotBinary(ContentId),
    #[error("distributions range over different value sets ({0} vs {1} values)")]
    ValueSetMismatch(usize, usize),
    #[error("coupling marginal for {0} differs from the connection")]
    MarginalMismatch(Cell),
    #[error("coupling has {coupling} cells but the connection has {connection}")]
    CellCountMismatch { coupling: usize, connection: usize },
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// A joint distribution of the cells of one connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingDistribution {
    pub cells: Vec<Cell>,
    pub value_set: ValueSet,
    pub dist: Distribution,
}

impl CouplingDistribution {
    /// `{cells, distribution}` with outcomes keyed by `content@context`.
    pub fn to_json(&self) -> Value {
        let keys: Vec<String> = self.cells.iter().map(Cell::to_string).collect();
        let sets = vec![&self.value_set; self.cells.len()];
        json!({ "cells": keys, "distribution": distribution_json(&keys, &sets, &self.dist) })
    }

    /// `Pr[T_i = T_j]`.
    pub fn pair_equal_probability(&self, i: usize, j: usize) -> Rational {
        self.dist.iter().filter(|(o, _)| o[i] == o[j]).map(|(_, m)| m.clone()).sum()
    }

    /// `Pr[T_i = v]` summed over all `v`, with every `i` in `subset` equal.
    pub fn all_equal_probability(&self, subset: &[usize]) -> Rational {
        self.dist
            .iter()
            .filter(|(o, _)| subset.windows(2).all(|w| o[w[0]] == o[w[1]]))
            .map(|(_, m)| m.clone())
            .sum()
    }

    fn check_marginals(&self, connection: &Connection) -> Result<(), CouplingError> {
        if self.cells.len() != connection.len() {
            return Err(CouplingError::CellCountMismatch {
                coupling: self.cells.len(),
                connection: connection.len(),
            });
        }
        for (i, m) in connection.marginals.iter().enumerate() {
            if self.dist.marginal(&[i]).ok().as_ref() != Some(m) {
                return Err(CouplingError::MarginalMismatch(connection.cells[i].clone()));
            }
        }
        Ok(())
    }
}

/// The unique multimaximal coupling of a binary connection.
///
/// Cells are sorted by `p_i = Pr[first value]` (ties keep context order).
/// The support is the staircase where the `l` cells with the smallest `p_i`
/// take the second value and the rest the first, with mass
/// `p_(l+1) - p_(l)` (`p_(0) = 0`, `p_(k+1) = 1`). Zero-mass steps are dropped.
pub fn multimaximal_binary(connection: &Connection) -> Result<CouplingDistribution, CouplingError> {
    if !connection.is_binary() {
        return Err(CouplingError::NotBinary(connection.content.clone()));
    }
    let p = connection.first_value_probabilities();
    let order = sorted_order(&p);
    let k = p.len();
    let mut masses = BTreeMap::new();
    let mut outcome: Outcome = vec![0; k];
    let mut below = Rational::zero();
    for l in 0..=k {
        let top = if l < k { p[order[l]].clone() } else { Rational::one() };
        let mass = &top - &below;
        if !mass.is_zero() {
            masses.insert(outcome.clone(), mass);
        }
        if l < k {
            outcome[order[l]] = 1;
        }
        below = top;
    }
    Ok(CouplingDistribution {
        cells: connection.cells.clone(),
        value_set: connection.value_set.clone(),
        dist: Distribution::from_map_unchecked(vec![2; k], masses),
    })
}

/// Cell indices ordered by ascending `p`, ties broken by position.
pub fn sorted_order(p: &[Rational]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].cmp(&p[b]));
    order
}

/// Largest possible `Pr[X = Y]` over couplings of `X ~ m1`, `Y ~ m2`:
/// `Σ_v min(m1(v), m2(v))`.
pub fn max_pair_probability(m1: &Distribution, m2: &Distribution) -> Result<Rational, CouplingError> {
    if m1.shape() != m2.shape() || m1.arity() != 1 {
        return Err(CouplingError::ValueSetMismatch(
            m1.shape().first().copied().unwrap_or(0),
            m2.shape().first().copied().unwrap_or(0),
        ));
    }
    Ok(max_all_equal_probability(&[m1, m2]))
}

/// Largest possible `Pr[all equal]` for variables with these marginals.
pub fn max_all_equal_probability(marginals: &[&Distribution]) -> Rational {
    let Some(first) = marginals.first() else {
        return Rational::one();
    };
    let dense: Vec<Vec<Rational>> = marginals.iter().map(|m| m.dense()).collect();
    (0..first.shape()[0])
        .map(|v| dense.iter().map(|d| &d[v]).fold(&dense[0][v], |a, b| min_ref(a, b)).clone())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMaximality {
    pub first: Cell,
    pub second: Cell,
    pub achieved: Rational,
    pub maximum: Rational,
}

impl PairMaximality {
    pub fn is_maximal(&self) -> bool {
        self.achieved == self.maximum
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMaximalityReport {
    pub pairs: Vec<PairMaximality>,
}

impl PairMaximalityReport {
    pub fn is_multimaximal(&self) -> bool {
        self.pairs.iter().all(PairMaximality::is_maximal)
    }
}

fn pair_report(
    coupling: &CouplingDistribution,
    connection: &Connection,
    pairs: impl Iterator<Item = (usize, usize)>,
) -> Result<PairMaximalityReport, CouplingError> {
    coupling.check_marginals(connection)?;
    let pairs = pairs
        .map(|(i, j)| {
            Ok(PairMaximality {
                first: connection.cells[i].clone(),
                second: connection.cells[j].clone(),
                achieved: coupling.pair_equal_probability(i, j),
                maximum: max_pair_probability(&connection.marginals[i], &connection.marginals[j])?,
            })
        })
        .collect::<Result<Vec<_>, CouplingError>>()?;
    Ok(PairMaximalityReport { pairs })
}

/// Checks every unordered pair of cells for maximal `Pr[T_i = T_j]`.
pub fn is_multimaximal(
    coupling: &CouplingDistribution,
    connection: &Connection,
) -> Result<PairMaximalityReport, CouplingError> {
    let k = connection.len();
    pair_report(coupling, connection, (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))))
}

/// Binary connections only: checks just the pairs adjacent after sorting by
/// `Pr[first value]`, which is already equivalent to the all-pairs check.
pub fn is_multimaximal_consecutive(
    coupling: &CouplingDistribution,
    connection: &Connection,
) -> Result<PairMaximalityReport, CouplingError> {
    if !connection.is_binary() {
        return Err(CouplingError::NotBinary(connection.content.clone()));
    }
    let order = sorted_order(&connection.first_value_probabilities());
    let pairs: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
    pair_report(coupling, connection, pairs.into_iter())
}

/// The LP whose feasible points are exactly the multimaximal couplings.
///
/// Variables are the masses of the full product space of the connection, in
/// canonical outcome order.
pub fn multimaximal_program(connection: &Connection, budget: u128) -> Result<LinearProgram, CouplingError> {
    let k = connection.len();
    let m = connection.value_set.len();
    let count = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    TooLarge::check(|| format!("coupling of connection {}", connection.content), count, budget)?;
    let shape = vec![m; k];
    let n = count as usize;
    let mut lp = LinearProgram::new(n);

    let mut marginal_rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); k * m];
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let mut pair_rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); pairs.len()];
    for (x, o) in outcomes(&shape).enumerate() {
        for (i, v) in o.iter().enumerate() {
            marginal_rows[i * m + v].push((x, Rational::one()));
        }
        for (r, (i, j)) in pairs.iter().enumerate() {
            if o[*i] == o[*j] {
                pair_rows[r].push((x, Rational::one()));
            }
        }
    }
    for (r, terms) in marginal_rows.into_iter().enumerate() {
        let (i, v) = (r / m, r % m);
        let rhs = connection.marginals[i].mass(&[v]);
        let label = format!("marginal {}={}", connection.cells[i], connection.value_set.label(v));
        lp.add_constraint(Constraint::new(terms, Relation::Eq, rhs).labeled(label));
    }
    for ((i, j), terms) in pairs.iter().zip(pair_rows) {
        let rhs = max_pair_probability(&connection.marginals[*i], &connection.marginals[*j])?;
        let label = format!("maximal {}~{}", connection.cells[*i], connection.cells[*j]);
        lp.add_constraint(Constraint::new(terms, Relation::Eq, rhs).labeled(label));
    }
    Ok(lp)
}

/// Exact proof that a connection has no multimaximal coupling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingCertificate {
    pub program: LinearProgram,
    pub certificate: FarkasCertificate,
}

impl CouplingCertificate {
    pub fn verify(&self) -> bool {
        self.certificate.verify(&self.program)
    }

    /// Labels and multipliers of the rows used by the certificate.
    pub fn rows(&self) -> Vec<(String, Rational)> {
        self.certificate
            .rows(&self.program)
            .map(|(r, label, l)| (label.map_or_else(|| format!("r{r}"), str::to_string), l.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MultimaximalOutcome {
    Exists(CouplingDistribution),
    Impossible(CouplingCertificate),
}

fn coupling_from_point(connection: &Connection, point: &[Rational]) -> CouplingDistribution {
    let shape = vec![connection.value_set.len(); connection.len()];
    let masses = outcomes(&shape).zip(point).map(|(o, m)| (o, m.clone())).collect();
    CouplingDistribution {
        cells: connection.cells.clone(),
        value_set: connection.value_set.clone(),
        dist: Distribution::from_map_unchecked(shape, masses),
    }
}

/// Finds some multimaximal coupling, or proves there is none.
pub fn multimaximal_exists(
    connection: &Connection,
    options: &AnalysisOptions,
) -> Result<MultimaximalOutcome, CouplingError> {
    let program = multimaximal_program(connection, options.budget)?;
    let solution = lp::solve(&program, options.mode)?;
    match solution.status {
        Status::Feasible | Status::Optimal => {
            let point = solution.point.expect("feasible solutions carry a point");
            Ok(MultimaximalOutcome::Exists(coupling_from_point(connection, &point)))
        }
        _ => Ok(MultimaximalOutcome::Impossible(CouplingCertificate {
            program,
            certificate: solution.certificate.expect("infeasible solutions carry a certificate"),
        })),
    }
}

/// Up to `limit` distinct vertices of the multimaximal coupling polytope.
///
/// Vertices are found by minimizing and then maximizing the mass of each
/// outcome in the product of the marginal supports. The list is empty when no
/// multimaximal coupling exists and is not claimed to be complete.
pub fn enumerate_multimaximal(
    connection: &Connection,
    limit: usize,
    options: &AnalysisOptions,
) -> Result<Vec<CouplingDistribution>, CouplingError> {
    let mut program = multimaximal_program(connection, options.budget)?;
    let mut found: Vec<CouplingDistribution> = Vec::new();
    let mut seen: BTreeSet<Vec<(Outcome, Rational)>> = BTreeSet::new();
    let mut record = |point: Vec<Rational>, found: &mut Vec<CouplingDistribution>| {
        let c = coupling_from_point(connection, &point);
        let key: Vec<(Outcome, Rational)> = c.dist.iter().map(|(o, m)| (o.clone(), m.clone())).collect();
        if seen.insert(key) {
            found.push(c);
        }
    };

    let first = lp::solve(&program, options.mode)?;
    if !first.is_feasible() || limit == 0 {
        return Ok(found);
    }
    record(first.point.expect("feasible"), &mut found);

    let shape = vec![connection.value_set.len(); connection.len()];
    let supports: Vec<BTreeSet<usize>> =
        (0..connection.len()).map(|i| connection.support_of(i).into_iter().collect()).collect();
    for (x, o) in outcomes(&shape).enumerate() {
        if found.len() >= limit {
            break;
        }
        if !o.iter().zip(&supports).all(|(v, s)| s.contains(v)) {
            continue;
        }
        for sign in [1, -1] {
            program.set_objective(vec![(x, Rational::from_integer(sign.into()))]);
            let s = lp::solve(&program, options.mode)?;
            if let Some(point) = s.point {
                record(point, &mut found);
            }
            if found.len() >= limit {
                break;
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn staircase_of_three() {
        let c = Connection::binary("q", &[rat(1, 5), rat(1, 2), rat(7, 10)]).unwrap();
        let t = multimaximal_binary(&c).unwrap();
        let got: Vec<(Outcome, Rational)> = t.dist.iter().map(|(o, m)| (o.clone(), m.clone())).collect();
        assert_eq!(
            got,
            vec![
                (vec![0, 0, 0], rat(1, 5)),
                (vec![1, 0, 0], rat(3, 10)),
                (vec![1, 1, 0], rat(1, 5)),
                (vec![1, 1, 1], rat(3, 10)),
            ]
        );
        assert!(is_multimaximal(&t, &c).unwrap().is_multimaximal());
    }

    #[test]
    fn staircase_drops_zero_steps() {
        let c = Connection::binary("q", &[rat(0, 1), rat(1, 2), rat(1, 2)]).unwrap();
        let t = multimaximal_binary(&c).unwrap();
        assert_eq!(t.dist.support_len(), 2);
        assert_eq!(t.dist.mass(&[1, 0, 0]), rat(1, 2));
        assert_eq!(t.dist.mass(&[1, 1, 1]), rat(1, 2));
    }

    #[test]
    fn identity_coupling_for_equal_marginals() {
        let c = Connection::binary("q", &[rat(1, 2), rat(1, 2)]).unwrap();
        let t = multimaximal_binary(&c).unwrap();
        assert_eq!(t.dist.mass(&[0, 0]), rat(1, 2));
        assert_eq!(t.dist.mass(&[1, 1]), rat(1, 2));
        let independent = CouplingDistribution { dist: Distribution::uniform(vec![2, 2]), ..t };
        let report = is_multimaximal(&independent, &c).unwrap();
        assert!(!report.is_multimaximal());
        assert_eq!(report.pairs[0].achieved, rat(1, 2));
    }

    #[test]
    fn pair_maxima() {
        let a = Distribution::univariate(vec![rat(0, 1), rat(1, 2), rat(1, 2)]).unwrap();
        let b = Distribution::univariate(vec![rat(1, 2), rat(0, 1), rat(1, 2)]).unwrap();
        assert_eq!(max_pair_probability(&a, &b).unwrap(), rat(1, 2));
        assert_eq!(max_pair_probability(&a, &a).unwrap(), rat(1, 1));
        let x = Distribution::univariate(vec![rat(1, 1), rat(0, 1)]).unwrap();
        let y = Distribution::univariate(vec![rat(0, 1), rat(1, 1)]).unwrap();
        assert_eq!(max_pair_probability(&x, &y).unwrap(), rat(0, 1));
        assert!(matches!(max_pair_probability(&a, &x), Err(CouplingError::ValueSetMismatch(3, 2))));
    }

    #[test]
    fn non_binary_staircase_rejected() {
        let m = Distribution::univariate(vec![rat(1, 3), rat(1, 3), rat(1, 3)]).unwrap();
        let c = Connection::new("q", ValueSet::new(["a", "b", "c"]).unwrap(), vec![m]).unwrap();
        assert!(matches!(multimaximal_binary(&c), Err(CouplingError::NotBinary(_))));
    }

    #[test]
    fn budget_is_enforced() {
        let c = Connection::binary("q", &vec![rat(1, 2); 5]).unwrap();
        let options = AnalysisOptions { budget: 16, ..Default::default() };
        assert!(matches!(multimaximal_exists(&c, &options), Err(CouplingError::TooLarge(_))));
    }

    #[test]
    fn single_cell_is_its_own_coupling() {
        let c = Connection::binary("q", &[rat(1, 3)]).unwrap();
        let v = enumerate_multimaximal(&c, 10, &AnalysisOptions::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].dist, c.marginals[0]);
    }
}
