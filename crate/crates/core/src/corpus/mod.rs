//! Canonical systems and structural transforms.
//!
//! Generators produce either finished systems or a [`Skeleton`] (which
//! contents are measured in which context) to be filled with distributions.

mod structures;
mod transform;

pub mod random;

use std::collections::BTreeMap;

use crate::model::{Bunch, CCSystem, ContentId, ContextId, Distribution, ModelError, ValidationErrors, ValueSet};

pub use structures::{
    cea18_one_hot, correlated_pair, example1, example2, example2_couplings, gen_cea18, gen_cyclic, gen_rex,
    pr_box, rex_skeleton, cyclic_skeleton, CyclicSpec, CEA18_INCIDENCE,
};
pub use transform::{coarse_grain, dichotomize, DichotomizationMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("cyclic systems need rank at least 2, got {0}")]
    InvalidRank(usize),
    #[error("unknown content {0}")]
    UnknownContent(ContentId),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("expected {expected} bunch distributions, got {got}")]
    BunchCount { expected: usize, got: usize },
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Incidence structure of a system without probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub contents: Vec<ContentId>,
    /// Each context with the contents it measures, in bunch coordinate order.
    pub contexts: Vec<(ContextId, Vec<ContentId>)>,
}

impl Skeleton {
    pub fn cell_count(&self) -> usize {
        self.contexts.iter().map(|(_, q)| q.len()).sum()
    }

    /// Contexts measuring `content`, in context order.
    pub fn contexts_of(&self, content: &ContentId) -> Vec<&ContextId> {
        self.contexts.iter().filter(|(_, qs)| qs.contains(content)).map(|(c, _)| c).collect()
    }

    /// Attaches one distribution per context, all contents binary.
    pub fn fill_binary(&self, dists: Vec<Distribution>) -> Result<CCSystem, CorpusError> {
        let value_sets = self.contents.iter().map(|q| (q.clone(), ValueSet::binary())).collect();
        self.fill(value_sets, dists)
    }

    pub fn fill(
        &self,
        value_sets: BTreeMap<ContentId, ValueSet>,
        dists: Vec<Distribution>,
    ) -> Result<CCSystem, CorpusError> {
        if dists.len() != self.contexts.len() {
            return Err(CorpusError::BunchCount { expected: self.contexts.len(), got: dists.len() });
        }
        let bunches = self
            .contexts
            .iter()
            .zip(dists)
            .map(|((context, contents), dist)| Bunch { context: context.clone(), contents: contents.clone(), dist })
            .collect();
        Ok(CCSystem::new(self.contents.clone(), value_sets, bunches)?)
    }
}

impl From<&CCSystem> for Skeleton {
    fn from(system: &CCSystem) -> Self {
        Skeleton {
            contents: system.contents().to_vec(),
            contexts: system.bunches().iter().map(|b| (b.context.clone(), b.contents.clone())).collect(),
        }
    }
}
