use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

/// A tuple of value indices, one per coordinate.
pub type Outcome = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistributionError {
    #[error("outcome {outcome:?} does not fit shape {shape:?}")]
    OutOfRange { outcome: Outcome, shape: Vec<usize> },
    #[error("outcome {0:?} listed twice")]
    DuplicateOutcome(Outcome),
    #[error("negative mass {} on outcome {outcome:?}", format_rational(.mass))]
    NegativeMass { outcome: Outcome, mass: Rational },
    #[error("masses sum to {}, not 1", format_rational(.0))]
    NonNormalized(Rational),
    #[error("coordinate {coord} out of range for arity {arity}")]
    UnknownCoordinate { coord: usize, arity: usize },
}

/// Exact probability distribution over a finite product space.
///
/// `shape[i]` is the number of values of coordinate `i`. Only outcomes with
/// nonzero mass are stored, so two distributions are equal exactly when their
/// masses agree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Distribution {
    shape: Vec<usize>,
    masses: BTreeMap<Outcome, Rational>,
}

impl Distribution {
    /// Checked constructor: outcomes in range, distinct, nonnegative, summing to one.
    pub fn new(
        shape: Vec<usize>,
        entries: impl IntoIterator<Item = (Outcome, Rational)>,
    ) -> Result<Self, DistributionError> {
        let mut masses = BTreeMap::new();
        let mut total = Rational::zero();
        for (outcome, mass) in entries {
            if !fits(&shape, &outcome) {
                return Err(DistributionError::OutOfRange { outcome, shape });
            }
            if mass.is_negative() {
                return Err(DistributionError::NegativeMass { outcome, mass });
            }
            if masses.contains_key(&outcome) {
                return Err(DistributionError::DuplicateOutcome(outcome));
            }
            total += &mass;
            if !mass.is_zero() {
                masses.insert(outcome, mass);
            }
        }
        if !total.is_one() {
            return Err(DistributionError::NonNormalized(total));
        }
        Ok(Distribution { shape, masses })
    }

    /// Builds from masses already known to be a valid distribution; zero entries are dropped.
    pub(crate) fn from_map_unchecked(shape: Vec<usize>, mut masses: BTreeMap<Outcome, Rational>) -> Self {
        masses.retain(|_, m| !m.is_zero());
        debug_assert!(masses.keys().all(|o| fits(&shape, o)));
        debug_assert!(masses.values().all(|m| !m.is_negative()));
        debug_assert!(masses.values().sum::<Rational>().is_one());
        Distribution { shape, masses }
    }

    /// Univariate distribution from a dense mass vector.
    pub fn univariate(masses: Vec<Rational>) -> Result<Self, DistributionError> {
        let shape = vec![masses.len()];
        Self::new(shape, masses.into_iter().enumerate().map(|(v, m)| (vec![v], m)))
    }

    /// Point mass on a single outcome.
    pub fn point(shape: Vec<usize>, outcome: Outcome) -> Self {
        assert!(fits(&shape, &outcome));
        let mut masses = BTreeMap::new();
        masses.insert(outcome, Rational::one());
        Distribution { shape, masses }
    }

    /// Uniform distribution on the whole product space.
    pub fn uniform(shape: Vec<usize>) -> Self {
        let count = shape.iter().product::<usize>();
        let mass = Rational::new(1.into(), count.into());
        let masses = outcomes(&shape).map(|o| (o, mass.clone())).collect();
        Distribution { shape, masses }
    }

    /// Independent product of `self` and `other` (coordinates concatenated).
    pub fn product(&self, other: &Distribution) -> Distribution {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut masses = BTreeMap::new();
        for (a, pa) in &self.masses {
            for (b, pb) in &other.masses {
                let mut o = a.clone();
                o.extend_from_slice(b);
                masses.insert(o, pa * pb);
            }
        }
        Distribution { shape, masses }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn arity(&self) -> usize {
        self.shape.len()
    }

    /// Number of outcomes with nonzero mass.
    pub fn support_len(&self) -> usize {
        self.masses.len()
    }

    pub fn mass(&self, outcome: &[usize]) -> Rational {
        self.masses.get(outcome).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero-mass outcomes in canonical (lexicographic, last coordinate fastest) order.
    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.masses.iter()
    }

    /// Sums masses over every coordinate not listed in `coords`; the result's
    /// coordinates follow the order of `coords`.
    pub fn marginal(&self, coords: &[usize]) -> Result<Distribution, DistributionError> {
        if let Some(&coord) = coords.iter().find(|&&c| c >= self.arity()) {
            return Err(DistributionError::UnknownCoordinate { coord, arity: self.arity() });
        }
        let shape = coords.iter().map(|&c| self.shape[c]).collect();
        Ok(self.push_forward(shape, |o| coords.iter().map(|&c| o[c]).collect()))
    }

    /// Image of the distribution under a deterministic map of outcomes.
    pub fn push_forward(&self, shape: Vec<usize>, map: impl Fn(&[usize]) -> Outcome) -> Distribution {
        let mut masses: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (o, m) in &self.masses {
            let image = map(o);
            debug_assert!(fits(&shape, &image));
            *masses.entry(image).or_insert_with(Rational::zero) += m;
        }
        Distribution { shape, masses }
    }

    /// Dense mass vector of a univariate distribution.
    pub fn dense(&self) -> Vec<Rational> {
        assert_eq!(self.arity(), 1, "dense() needs a univariate distribution");
        let mut out = vec![Rational::zero(); self.shape[0]];
        for (o, m) in &self.masses {
            out[o[0]] = m.clone();
        }
        out
    }
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (o, m) in &self.masses {
            map.entry(o, &format_rational(m));
        }
        map.finish()
    }
}

fn fits(shape: &[usize], outcome: &[usize]) -> bool {
    outcome.len() == shape.len() && outcome.iter().zip(shape).all(|(v, n)| v < n)
}

/// Row-major index of `outcome` (last coordinate fastest).
pub fn outcome_index(shape: &[usize], outcome: &[usize]) -> usize {
    outcome.iter().zip(shape).fold(0, |acc, (v, n)| acc * n + v)
}

/// Inverse of [`outcome_index`].
pub fn outcome_at(shape: &[usize], mut index: usize) -> Outcome {
    let mut out = vec![0; shape.len()];
    for (slot, n) in out.iter_mut().zip(shape).rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

/// All outcomes of a product space in canonical order.
pub fn outcomes(shape: &[usize]) -> impl Iterator<Item = Outcome> + '_ {
    let count = if shape.contains(&0) { 0 } else { shape.iter().product() };
    (0..count).map(move |i| outcome_at(shape, i))
}
