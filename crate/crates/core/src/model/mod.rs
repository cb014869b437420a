//! ConteXt-conteNt systems: bunches, connections and their validation.
//!
//! A system is a matrix of random variables indexed by (content, context).
//! Each row (context) is a bunch with a known joint distribution; each column
//! (content) is a connection of pairwise stochastically unrelated variables
//! sharing one value set. After construction every value here is immutable.

mod distribution;
mod json;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use distribution::{outcome_at, outcome_index, outcomes, Distribution, DistributionError, Outcome};
pub use json::{distribution_json, rational_json, RawContext, RawEntry, RawLabel, RawMass, RawSystem};
pub use validate::{validate_system, ValidationError, ValidationErrors};

use crate::rational::Rational;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

id_type!(
    /// What a variable measures (a column of the matrix).
    ContentId
);
id_type!(
    /// Conditions under which variables are recorded jointly (a row of the matrix).
    ContextId
);

/// Ordered, distinct value labels shared by every variable of a connection.
///
/// The order fixes the index of each label in outcome tuples. Value sets of a
/// single label only arise from coarse-graining everything into one lump.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueSet {
    labels: Vec<String>,
}

impl ValueSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, String> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err("value set is empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(format!("label {dup:?} appears twice"));
        }
        Ok(ValueSet { labels })
    }

    /// The `{"1", "2"}` set used by every generator of binary systems.
    pub fn binary() -> Self {
        ValueSet { labels: vec!["1".into(), "2".into()] }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.labels.len() == 2
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }
}

/// One random variable of a system, addressed by its content and context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub content: ContentId,
    pub context: ContextId,
}

impl Cell {
    pub fn new(content: impl Into<ContentId>, context: impl Into<ContextId>) -> Self {
        Cell { content: content.into(), context: context.into() }
    }
}

impl From<String> for ContentId {
    fn from(s: String) -> Self {
        ContentId(s)
    }
}

impl From<String> for ContextId {
    fn from(s: String) -> Self {
        ContextId(s)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.content, self.context)
    }
}

impl std::str::FromStr for Cell {
    type Err = String;

    /// Parses the `content@context` form; the last `@` separates the two.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('@') {
            Some((q, c)) if !q.is_empty() && !c.is_empty() => Ok(Cell::new(q, c)),
            _ => Err(format!("expected content@context, got {s:?}")),
        }
    }
}

/// The jointly distributed variables of one context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bunch {
    pub context: ContextId,
    /// Contents measured in this context, in distribution coordinate order.
    pub contents: Vec<ContentId>,
    pub dist: Distribution,
}

impl Bunch {
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.contents.iter().map(|q| Cell { content: q.clone(), context: self.context.clone() })
    }

    pub fn position(&self, content: &ContentId) -> Option<usize> {
        self.contents.iter().position(|q| q == content)
    }

    /// Exact marginal over the listed contents, in the listed order.
    pub fn marginal(&self, contents: &[ContentId]) -> Result<Distribution, ModelError> {
        let coords = contents
            .iter()
            .map(|q| {
                self.position(q).ok_or_else(|| ModelError::UnknownCell(Cell {
                    content: q.clone(),
                    context: self.context.clone(),
                }))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.dist.marginal(&coords).expect("positions are in range"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown content {0}")]
    UnknownContent(ContentId),
    #[error("unknown cell {0}")]
    UnknownCell(Cell),
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
}

/// A validated conteXt-conteNt system.
///
/// Contents and contexts keep the order of first appearance in the input;
/// that order indexes every derived structure (connections, LP columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CCSystem {
    contents: Vec<ContentId>,
    value_sets: BTreeMap<ContentId, ValueSet>,
    bunches: Vec<Bunch>,
}

impl CCSystem {
    /// Validates and assembles a system from its parts.
    pub fn new(
        contents: Vec<ContentId>,
        value_sets: BTreeMap<ContentId, ValueSet>,
        bunches: Vec<Bunch>,
    ) -> Result<Self, ValidationErrors> {
        let errors = validate::check_parts(&contents, &value_sets, &bunches);
        if errors.is_empty() {
            Ok(CCSystem { contents, value_sets, bunches })
        } else {
            Err(ValidationErrors(errors))
        }
    }

    /// Parses and validates the JSON document format.
    pub fn from_json_str(text: &str) -> Result<Self, crate::Error> {
        let raw: RawSystem = serde_json::from_str(text).map_err(|e| crate::Error::Parse(e.to_string()))?;
        Ok(validate_system(&raw)?)
    }

    pub fn contents(&self) -> &[ContentId] {
        &self.contents
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextId> {
        self.bunches.iter().map(|b| &b.context)
    }

    pub fn value_set(&self, content: &ContentId) -> Option<&ValueSet> {
        self.value_sets.get(content)
    }

    pub fn value_sets(&self) -> &BTreeMap<ContentId, ValueSet> {
        &self.value_sets
    }

    pub fn bunches(&self) -> &[Bunch] {
        &self.bunches
    }

    pub fn bunch(&self, context: &ContextId) -> Option<&Bunch> {
        self.bunches.iter().find(|b| &b.context == context)
    }

    /// Every cell, context-major, in bunch coordinate order.
    pub fn cells(&self) -> Vec<Cell> {
        self.bunches.iter().flat_map(Bunch::cells).collect()
    }

    pub fn has_cell(&self, cell: &Cell) -> bool {
        self.bunch(&cell.context).is_some_and(|b| b.position(&cell.content).is_some())
    }

    /// True when every variable is binary.
    pub fn is_binary(&self) -> bool {
        self.value_sets.values().all(ValueSet::is_binary)
    }

    /// Number of outcomes of a coupling of all cells, saturating at `u128::MAX`.
    pub fn joint_outcome_count(&self) -> u128 {
        self.bunches
            .iter()
            .flat_map(|b| b.contents.iter())
            .map(|q| self.value_sets[q].len() as u128)
            .try_fold(1u128, |acc, n| acc.checked_mul(n))
            .unwrap_or(u128::MAX)
    }

    /// The connection of `content`: its cells in context order with exact marginals.
    pub fn connection_of(&self, content: &ContentId) -> Result<Connection, ModelError> {
        let value_set = self
            .value_sets
            .get(content)
            .filter(|_| self.contents.contains(content))
            .ok_or_else(|| ModelError::UnknownContent(content.clone()))?;
        let mut cells = Vec::new();
        let mut marginals = Vec::new();
        for bunch in &self.bunches {
            if let Some(pos) = bunch.position(content) {
                cells.push(Cell { content: content.clone(), context: bunch.context.clone() });
                marginals.push(bunch.dist.marginal(&[pos]).expect("position in range"));
            }
        }
        Ok(Connection { content: content.clone(), value_set: value_set.clone(), cells, marginals })
    }

    pub fn connections(&self) -> Vec<Connection> {
        self.contents
            .iter()
            .map(|q| self.connection_of(q).expect("contents are known"))
            .collect()
    }

    /// Exact marginal of the bunch of `context` over `contents`.
    pub fn marginal(&self, context: &ContextId, contents: &[ContentId]) -> Result<Distribution, ModelError> {
        let bunch = self.bunch(context).ok_or_else(|| {
            ModelError::UnknownCell(Cell {
                content: contents.first().cloned().unwrap_or_else(|| ContentId::new("")),
                context: context.clone(),
            })
        })?;
        bunch.marginal(contents)
    }

    /// Whether all variables of each connection share one distribution; also
    /// returns the contents whose connections disagree.
    pub fn is_consistently_connected(&self) -> (bool, Vec<ContentId>) {
        let offending: Vec<ContentId> = self
            .connections()
            .into_iter()
            .filter(|c| !c.is_consistent())
            .map(|c| c.content)
            .collect();
        (offending.is_empty(), offending)
    }

    pub(crate) fn from_parts_unchecked(
        contents: Vec<ContentId>,
        value_sets: BTreeMap<ContentId, ValueSet>,
        bunches: Vec<Bunch>,
    ) -> Self {
        debug_assert!(validate::check_parts(&contents, &value_sets, &bunches).is_empty());
        CCSystem { contents, value_sets, bunches }
    }
}

/// All variables sharing a content, with their (derived) marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub content: ContentId,
    pub value_set: ValueSet,
    pub cells: Vec<Cell>,
    pub marginals: Vec<Distribution>,
}

impl Connection {
    /// A standalone connection, e.g. for studying couplings outside any system.
    pub fn new(
        content: impl Into<ContentId>,
        value_set: ValueSet,
        marginals: Vec<Distribution>,
    ) -> Result<Self, ModelError> {
        let content = content.into();
        if marginals.is_empty() {
            return Err(ModelError::Invalid(ValidationErrors(vec![ValidationError::EmptyConnection {
                content,
            }])));
        }
        let cells = (1..=marginals.len()).map(|i| Cell::new(content.clone(), format!("c{i}"))).collect();
        let conn = Connection { content, value_set, cells, marginals };
        conn.check_shapes()?;
        Ok(conn)
    }

    /// Binary connection from `p_i = Pr[value "1"]`, contexts named `c1..ck`.
    pub fn binary(content: impl Into<ContentId>, p: &[Rational]) -> Result<Self, ModelError> {
        let marginals = p
            .iter()
            .map(|pi| Distribution::univariate(vec![pi.clone(), <Rational as num_traits::One>::one() - pi]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| {
                ModelError::Invalid(ValidationErrors(vec![ValidationError::Distribution {
                    context: ContextId::new("?"),
                    error: e,
                }]))
            })?;
        Connection::new(content, ValueSet::binary(), marginals)
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        let bad = self.marginals.iter().zip(&self.cells).find(|(m, _)| m.shape() != [self.value_set.len()]);
        match bad {
            Some((_, cell)) => Err(ModelError::Invalid(ValidationErrors(vec![ValidationError::ValueSetMismatch {
                content: cell.content.clone(),
                context: cell.context.clone(),
                label: String::new(),
            }]))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.value_set.is_binary()
    }

    /// `Pr[first value]` per cell, for binary connections.
    pub fn first_value_probabilities(&self) -> Vec<Rational> {
        self.marginals.iter().map(|m| m.mass(&[0])).collect()
    }

    pub fn is_consistent(&self) -> bool {
        self.marginals.windows(2).all(|w| w[0] == w[1])
    }

    /// Values with positive probability in the marginal of cell `i`.
    pub fn support_of(&self, i: usize) -> Vec<usize> {
        self.marginals[i].iter().map(|(o, _)| o[0]).collect()
    }
}
