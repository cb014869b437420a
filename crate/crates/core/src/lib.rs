//! Contextuality-by-Default analysis of context-content systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`rational`] exact rational helpers shared by everything else;
//! * [`model`] systems, bunches, connections and their JSON form;
//! * [`lp`] an exact rational simplex with infeasibility certificates;
//! * [`coupling`] maximal and multimaximal couplings of connections;
//! * [`contextuality`] system-level verdicts and the quasi-coupling measure;
//! * [`corpus`] generators and structural transforms.

pub mod contextuality;
pub mod corpus;
pub mod coupling;
pub mod lp;
pub mod model;
pub mod rational;

pub use contextuality::{
    build_coupling_spec, check, check_pair_consistency, measure, subsystem, ContextualityReport, CouplingSpec,
    PairConsistencyReport, QuasiCoupling, SystemCoupling, Verdict,
};
pub use coupling::{
    enumerate_multimaximal, is_multimaximal, max_pair_probability, multimaximal_binary, multimaximal_exists,
    CouplingDistribution, CouplingError, MultimaximalOutcome, PairMaximality, PairMaximalityReport,
};
pub use lp::{LPSolution, LinearProgram, SolveMode};
pub use model::{Bunch, CCSystem, Cell, Connection, ContentId, ContextId, Distribution, ValueSet};
pub use rational::Rational;

/// Default cap on the number of joint outcomes an LP may range over.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// Knobs shared by every LP-backed analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Largest outcome space an LP may be built over.
    pub budget: u128,
    pub mode: SolveMode,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { budget: DEFAULT_BUDGET, mode: SolveMode::Exact }
    }
}

/// An LP would range over more outcomes than the configured budget allows.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{what} needs {outcomes} joint outcomes, over the budget of {budget}")]
pub struct TooLarge {
    pub what: String,
    pub outcomes: u128,
    pub budget: u128,
}

impl TooLarge {
    pub(crate) fn check(what: impl FnOnce() -> String, outcomes: u128, budget: u128) -> Result<(), TooLarge> {
        if outcomes > budget {
            Err(TooLarge { what: what(), outcomes, budget })
        } else {
            Ok(())
        }
    }
}

/// Errors surfaced across module boundaries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] model::ValidationErrors),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Coupling(coupling::CouplingError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    TooLarge(#[from] TooLarge),
}

impl From<coupling::CouplingError> for Error {
    fn from(e: coupling::CouplingError) -> Self {
        match e {
            coupling::CouplingError::TooLarge(t) => Error::TooLarge(t),
            other => Error::Coupling(other),
        }
    }
}
