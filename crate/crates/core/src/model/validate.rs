use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::json::{RawLabel, RawSystem};
use super::{Bunch, CCSystem, ContentId, ContextId, Distribution, DistributionError, ValueSet};
use crate::rational::{format_rational, Rational};

/// One violated invariant, with the coordinates of the offending cell,
/// context or content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationError {
    InvalidValueSet { content: ContentId, reason: String },
    MissingValueSet { content: ContentId },
    DuplicateContent { content: ContentId },
    DuplicateContext { context: ContextId },
    UnknownContent { content: ContentId, context: ContextId },
    DuplicateCell { content: ContentId, context: ContextId },
    EmptyConnection { content: ContentId },
    EmptyBunch { context: ContextId },
    ValueSetMismatch { content: ContentId, context: ContextId, label: String },
    MalformedOutcome { context: ContextId, reason: String },
    MalformedMass { context: ContextId, input: String },
    DuplicateOutcome { context: ContextId },
    NegativeMass { context: ContextId, mass: Rational },
    NonNormalized { context: ContextId, total: Rational },
    Distribution { context: ContextId, error: DistributionError },
}

impl ValidationError {
    /// Short machine-readable name of the violation.
    pub fn kind(&self) -> &'static str {
        match self {
            ValidationError::InvalidValueSet { .. } => "InvalidValueSet",
            ValidationError::MissingValueSet { .. } => "MissingValueSet",
            ValidationError::DuplicateContent { .. } => "DuplicateContent",
            ValidationError::DuplicateContext { .. } => "DuplicateContext",
            ValidationError::UnknownContent { .. } => "UnknownContent",
            ValidationError::DuplicateCell { .. } => "DuplicateCell",
            ValidationError::EmptyConnection { .. } => "EmptyConnection",
            ValidationError::EmptyBunch { .. } => "EmptyBunch",
            ValidationError::ValueSetMismatch { .. } => "ValueSetMismatch",
            ValidationError::MalformedOutcome { .. } => "MalformedOutcome",
            ValidationError::MalformedMass { .. } => "MalformedMass",
            ValidationError::DuplicateOutcome { .. } => "DuplicateOutcome",
            ValidationError::NegativeMass { .. } => "NegativeMass",
            ValidationError::NonNormalized { .. } => "NonNormalized",
            ValidationError::Distribution { .. } => "InvalidDistribution",
        }
    }

    pub fn context(&self) -> Option<&ContextId> {
        match self {
            ValidationError::DuplicateContext { context }
            | ValidationError::UnknownContent { context, .. }
            | ValidationError::DuplicateCell { context, .. }
            | ValidationError::EmptyBunch { context }
            | ValidationError::ValueSetMismatch { context, .. }
            | ValidationError::MalformedOutcome { context, .. }
            | ValidationError::MalformedMass { context, .. }
            | ValidationError::DuplicateOutcome { context }
            | ValidationError::NegativeMass { context, .. }
            | ValidationError::NonNormalized { context, .. }
            | ValidationError::Distribution { context, .. } => Some(context),
            _ => None,
        }
    }

    pub fn content(&self) -> Option<&ContentId> {
        match self {
            ValidationError::InvalidValueSet { content, .. }
            | ValidationError::MissingValueSet { content }
            | ValidationError::DuplicateContent { content }
            | ValidationError::UnknownContent { content, .. }
            | ValidationError::DuplicateCell { content, .. }
            | ValidationError::EmptyConnection { content }
            | ValidationError::ValueSetMismatch { content, .. } => Some(content),
            _ => None,
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::InvalidValueSet { content, reason } => write!(f, "value set of {content}: {reason}"),
            ValidationError::MissingValueSet { content } => write!(f, "no value set for content {content}"),
            ValidationError::DuplicateContent { content } => write!(f, "content {content} listed twice"),
            ValidationError::DuplicateContext { context } => write!(f, "context {context} listed twice"),
            ValidationError::UnknownContent { content, context } => {
                write!(f, "context {context} measures undeclared content {content}")
            }
            ValidationError::DuplicateCell { content, context } => write!(f, "cell {content}@{context} appears twice"),
            ValidationError::EmptyConnection { content } => write!(f, "content {content} is measured in no context"),
            ValidationError::EmptyBunch { context } => write!(f, "context {context} has no cells"),
            ValidationError::ValueSetMismatch { content, context, label } => {
                write!(f, "cell {content}@{context} takes value {label:?} outside the value set of {content}")
            }
            ValidationError::MalformedOutcome { context, reason } => write!(f, "context {context}: {reason}"),
            ValidationError::MalformedMass { context, input } => write!(f, "context {context}: malformed mass {input:?}"),
            ValidationError::DuplicateOutcome { context } => write!(f, "context {context}: outcome listed twice"),
            ValidationError::NegativeMass { context, mass } => {
                write!(f, "context {context}: negative mass {}", format_rational(mass))
            }
            ValidationError::NonNormalized { context, total } => {
                write!(f, "context {context}: masses sum to {}, not 1", format_rational(total))
            }
            ValidationError::Distribution { context, error } => write!(f, "context {context}: {error}"),
        }
    }
}

/// Every violation found in one input, in discovery order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "invalid system: {}", parts.join("; "))
    }
}

impl ValidationErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ValidationError> {
        self.0.iter()
    }
}

/// Structural checks shared by [`CCSystem::new`] and [`validate_system`].
pub(super) fn check_parts(
    contents: &[ContentId],
    value_sets: &BTreeMap<ContentId, ValueSet>,
    bunches: &[Bunch],
) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for q in contents {
        if !seen.insert(q) {
            errors.push(ValidationError::DuplicateContent { content: q.clone() });
        }
        if !value_sets.contains_key(q) {
            errors.push(ValidationError::MissingValueSet { content: q.clone() });
        }
    }
    let mut contexts = HashSet::new();
    let mut measured = HashSet::new();
    for bunch in bunches {
        let c = &bunch.context;
        if !contexts.insert(c) {
            errors.push(ValidationError::DuplicateContext { context: c.clone() });
        }
        if bunch.contents.is_empty() {
            errors.push(ValidationError::EmptyBunch { context: c.clone() });
        }
        let mut in_bunch = HashSet::new();
        let mut shape = Vec::new();
        for q in &bunch.contents {
            if !in_bunch.insert(q) {
                errors.push(ValidationError::DuplicateCell { content: q.clone(), context: c.clone() });
            }
            if !seen.contains(q) {
                errors.push(ValidationError::UnknownContent { content: q.clone(), context: c.clone() });
            }
            measured.insert(q);
            shape.push(value_sets.get(q).map_or(0, ValueSet::len));
        }
        if bunch.dist.shape() != shape.as_slice() {
            errors.push(ValidationError::MalformedOutcome {
                context: c.clone(),
                reason: format!("distribution shape {:?} does not match value sets {:?}", bunch.dist.shape(), shape),
            });
        }
    }
    for q in contents {
        if !measured.contains(q) {
            errors.push(ValidationError::EmptyConnection { content: q.clone() });
        }
    }
    errors
}

/// Validates an untrusted document, reporting every violation found.
pub fn validate_system(raw: &RawSystem) -> Result<CCSystem, ValidationErrors> {
    let mut errors = Vec::new();
    let contents: Vec<ContentId> = raw.contents.iter().map(|q| ContentId::new(q.clone())).collect();

    let mut value_sets = BTreeMap::new();
    for (q, labels) in &raw.value_sets {
        let content = ContentId::new(q.clone());
        match ValueSet::new(labels.iter().map(RawLabel::to_label)) {
            Ok(vs) => {
                value_sets.insert(content, vs);
            }
            Err(reason) => errors.push(ValidationError::InvalidValueSet { content, reason }),
        }
    }

    let mut bunches = Vec::new();
    for ctx in &raw.contexts {
        let context = ContextId::new(ctx.id.clone());
        let cell_contents: Vec<ContentId> = ctx.cells.iter().map(|q| ContentId::new(q.clone())).collect();
        let shape: Vec<usize> = cell_contents
            .iter()
            .map(|q| value_sets.get(q).map_or(0, ValueSet::len))
            .collect();
        let resolvable = cell_contents.iter().all(|q| value_sets.contains_key(q));

        let mut entries: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        let mut bunch_ok = resolvable;
        for entry in &ctx.distribution {
            let mass = match entry.p.parse() {
                Ok(m) => m,
                Err(input) => {
                    errors.push(ValidationError::MalformedMass { context: context.clone(), input });
                    bunch_ok = false;
                    continue;
                }
            };
            if mass.is_negative() {
                errors.push(ValidationError::NegativeMass { context: context.clone(), mass: mass.clone() });
                bunch_ok = false;
            }
            total += &mass;
            if let Some(extra) = entry.outcome.keys().find(|k| !ctx.cells.contains(k)) {
                errors.push(ValidationError::MalformedOutcome {
                    context: context.clone(),
                    reason: format!("outcome names {extra:?}, which is not a cell of this context"),
                });
                bunch_ok = false;
                continue;
            }
            let mut outcome = Vec::with_capacity(cell_contents.len());
            for q in &cell_contents {
                let Some(label) = entry.outcome.get(q.as_str()) else {
                    errors.push(ValidationError::MalformedOutcome {
                        context: context.clone(),
                        reason: format!("outcome lacks a value for {q}"),
                    });
                    bunch_ok = false;
                    break;
                };
                let label = label.to_label();
                match value_sets.get(q).map(|vs| vs.index_of(&label)) {
                    Some(Some(i)) => outcome.push(i),
                    Some(None) => {
                        errors.push(ValidationError::ValueSetMismatch {
                            content: q.clone(),
                            context: context.clone(),
                            label,
                        });
                        bunch_ok = false;
                        break;
                    }
                    None => break,
                }
            }
            if outcome.len() != cell_contents.len() {
                continue;
            }
            if entries.insert(outcome, mass).is_some() {
                errors.push(ValidationError::DuplicateOutcome { context: context.clone() });
                bunch_ok = false;
            }
        }
        if !total.is_one() {
            errors.push(ValidationError::NonNormalized { context: context.clone(), total });
            bunch_ok = false;
        }
        let dist = if bunch_ok {
            match Distribution::new(shape.clone(), entries) {
                Ok(d) => d,
                Err(error) => {
                    errors.push(ValidationError::Distribution { context: context.clone(), error });
                    Distribution::point(vec![], vec![])
                }
            }
        } else {
            Distribution::point(vec![], vec![])
        };
        bunches.push(Bunch { context, contents: cell_contents, dist });
    }

    // Structural checks; skip shape complaints for bunches already reported.
    let reported: HashSet<ContextId> = errors.iter().filter_map(|e| e.context().cloned()).collect();
    let incomplete = contents.iter().any(|q| !value_sets.contains_key(q));
    for e in check_parts(&contents, &value_sets, &bunches) {
        let redundant = matches!(&e, ValidationError::MalformedOutcome { context, .. }
            if reported.contains(context) || incomplete);
        if !redundant {
            errors.push(e);
        }
    }
    for q in value_sets.keys() {
        if !contents.contains(q) {
            errors.push(ValidationError::InvalidValueSet {
                content: q.clone(),
                reason: "value set given for an undeclared content".into(),
            });
        }
    }

    if errors.is_empty() {
        Ok(CCSystem::from_parts_unchecked(contents, value_sets, bunches))
    } else {
        Err(ValidationErrors(errors))
    }
}
