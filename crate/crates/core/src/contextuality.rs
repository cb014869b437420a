//! System-level (non)contextuality and the quasi-coupling measure.
//!
//! A coupling of the whole system is a distribution over one value per cell.
//! [`build_coupling_spec`] writes down what such a coupling must satisfy:
//! each bunch is reproduced exactly and each connection's subcoupling is
//! multimaximal. For a binary connection that pins the subcoupling to the
//! staircase; for a categorical one it fixes every pairwise probability of
//! equality at its maximum, which is the "at least one combination of
//! multimaximal couplings" reading of noncontextuality.
//!
//! [`check`] asks whether a nonnegative such coupling exists. [`measure`]
//! drops nonnegativity of the joint (keeping connection subcouplings proper)
//! and minimizes total variation; the measure is that minimum less one.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::coupling::{self, max_pair_probability, multimaximal_binary, MultimaximalOutcome};
use crate::lp::{self, Bound, Constraint, LinearProgram, NumericFallback, Relation, Status};
use crate::model::{
    rational_json, Bunch, CCSystem, Cell, ContentId, ContextId, Distribution, ModelError, Outcome,
    ValueSet,
};
use crate::rational::{format_rational, Rational};
use crate::{AnalysisOptions, Error, TooLarge};

/// The linear constraints on a coupling of every cell of a system.
///
/// Variables are joint masses indexed in canonical outcome order over
/// [`CouplingSpec::cells`].
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    /// Every cell, bunch by bunch.
    pub cells: Vec<Cell>,
    /// Number of values per cell.
    pub shape: Vec<usize>,
    /// One equality per bunch outcome.
    pub bunch_constraints: Vec<Constraint>,
    /// Staircase equalities for binary connections, maximal pair equalities for categorical ones.
    pub connection_constraints: Vec<Constraint>,
    /// `≥ 0` on each outcome of a categorical connection subcoupling. Implied
    /// when the joint is nonnegative, binding for quasi-couplings.
    pub proper_constraints: Vec<Constraint>,
}

impl CouplingSpec {
    pub fn num_outcomes(&self) -> usize {
        self.shape.iter().product()
    }

    /// The constraint system as an LP with zero objective; `signed` frees the joint masses.
    pub fn program(&self, signed: bool) -> LinearProgram {
        let mut lp = LinearProgram::new(self.num_outcomes());
        if signed {
            lp.bounds = vec![Bound::free(); lp.num_vars];
        }
        lp.constraints.extend(self.bunch_constraints.iter().cloned());
        lp.constraints.extend(self.connection_constraints.iter().cloned());
        if signed {
            lp.constraints.extend(self.proper_constraints.iter().cloned());
        }
        lp
    }
}

/// Groups joint outcome indices by their restriction to `coords`.
fn group_by_restriction(shape: &[usize], coords: &[usize]) -> Vec<Vec<usize>> {
    let local_shape: Vec<usize> = coords.iter().map(|&c| shape[c]).collect();
    let mut strides = vec![0usize; shape.len()];
    let mut s = 1;
    for (k, &c) in coords.iter().enumerate().rev() {
        strides[c] += s;
        s *= local_shape[k];
    }
    let mut groups = vec![Vec::new(); s];
    for_each_outcome(shape, |x, o| {
        let local: usize = o.iter().zip(&strides).map(|(v, st)| v * st).sum();
        groups[local].push(x);
    });
    groups
}

/// Visits every outcome of `shape` in canonical order with its index.
fn for_each_outcome(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut o = vec![0usize; shape.len()];
    for x in 0..total {
        f(x, &o);
        for k in (0..shape.len()).rev() {
            o[k] += 1;
            if o[k] < shape[k] {
                break;
            }
            o[k] = 0;
        }
    }
}

fn ones(vars: Vec<usize>) -> Vec<(usize, Rational)> {
    vars.into_iter().map(|x| (x, Rational::one())).collect()
}

fn outcome_label(names: &[String], sets: &[&ValueSet], local: &[usize]) -> String {
    names
        .iter()
        .zip(sets)
        .zip(local)
        .map(|((n, vs), v)| format!("{n}={}", vs.label(*v)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Builds the coupling constraints for `system`.
pub fn build_coupling_spec(system: &CCSystem, options: &AnalysisOptions) -> Result<CouplingSpec, Error> {
    let outcomes = system.joint_outcome_count();
    TooLarge::check(|| "system coupling".to_string(), outcomes, options.budget)?;
    if usize::try_from(outcomes).is_err() {
        return Err(TooLarge { what: "system coupling".into(), outcomes, budget: options.budget }.into());
    }

    let cells = system.cells();
    let position: BTreeMap<&Cell, usize> = cells.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let shape: Vec<usize> = cells.iter().map(|c| system.value_sets()[&c.content].len()).collect();

    let mut bunch_constraints = Vec::new();
    for bunch in system.bunches() {
        let coords: Vec<usize> = bunch.cells().map(|c| position[&c]).collect();
        let names: Vec<String> = bunch.contents.iter().map(|q| q.to_string()).collect();
        let sets: Vec<&ValueSet> = bunch.contents.iter().map(|q| &system.value_sets()[q]).collect();
        for (local, vars) in crate::model::outcomes(bunch.dist.shape()).zip(group_by_restriction(&shape, &coords)) {
            let label = format!("bunch {}: {}", bunch.context, outcome_label(&names, &sets, &local));
            bunch_constraints.push(Constraint::new(ones(vars), Relation::Eq, bunch.dist.mass(&local)).labeled(label));
        }
    }

    let mut connection_constraints = Vec::new();
    let mut proper_constraints = Vec::new();
    for connection in system.connections() {
        if connection.len() < 2 {
            continue;
        }
        let coords: Vec<usize> = connection.cells.iter().map(|c| position[c]).collect();
        let names: Vec<String> = connection.cells.iter().map(|c| c.context.to_string()).collect();
        let sets = vec![&connection.value_set; connection.len()];
        if connection.is_binary() {
            let staircase = multimaximal_binary(&connection)?;
            let local_shape = vec![2; connection.len()];
            for (local, vars) in crate::model::outcomes(&local_shape).zip(group_by_restriction(&shape, &coords)) {
                let label =
                    format!("connection {}: {}", connection.content, outcome_label(&names, &sets, &local));
                connection_constraints
                    .push(Constraint::new(ones(vars), Relation::Eq, staircase.dist.mass(&local)).labeled(label));
            }
        } else {
            for i in 0..connection.len() {
                for j in i + 1..connection.len() {
                    let (a, b) = (coords[i], coords[j]);
                    let mut vars = Vec::new();
                    for_each_outcome(&shape, |x, o| {
                        if o[a] == o[b] {
                            vars.push(x);
                        }
                    });
                    let rhs = max_pair_probability(&connection.marginals[i], &connection.marginals[j])?;
                    let label = format!("maximal {}~{}", connection.cells[i], connection.cells[j]);
                    connection_constraints.push(Constraint::new(ones(vars), Relation::Eq, rhs).labeled(label));
                }
            }
            let local_shape = vec![connection.value_set.len(); connection.len()];
            for (local, vars) in crate::model::outcomes(&local_shape).zip(group_by_restriction(&shape, &coords)) {
                let label = format!("proper {}: {}", connection.content, outcome_label(&names, &sets, &local));
                proper_constraints.push(Constraint::new(ones(vars), Relation::Ge, Rational::zero()).labeled(label));
            }
        }
    }

    Ok(CouplingSpec { cells, shape, bunch_constraints, connection_constraints, proper_constraints })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Noncontextual,
    Contextual,
}

/// A proper coupling of every cell of a system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemCoupling {
    pub cells: Vec<Cell>,
    pub dist: Distribution,
}

/// A signed measure over joint outcomes with proper bunch and connection margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiCoupling {
    pub cells: Vec<Cell>,
    pub shape: Vec<usize>,
    /// Nonzero masses only.
    pub masses: BTreeMap<Outcome, Rational>,
    pub total_variation: Rational,
}

impl QuasiCoupling {
    /// Masses restricted to `coords`, summed over the rest; may be signed.
    pub fn marginal(&self, coords: &[usize]) -> BTreeMap<Outcome, Rational> {
        let mut out: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (o, m) in &self.masses {
            let key: Outcome = coords.iter().map(|&c| o[c]).collect();
            *out.entry(key).or_insert_with(Rational::zero) += m;
        }
        out.retain(|_, m| !m.is_zero());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Coupling(SystemCoupling),
    Quasi(QuasiCoupling),
}

/// Nonzero Farkas multipliers by constraint label, re-verified exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateReport {
    pub rows: Vec<(String, Rational)>,
    pub verified: bool,
}

impl CertificateReport {
    fn from_solution(program: &LinearProgram, certificate: &lp::FarkasCertificate) -> Self {
        let rows = certificate
            .rows(program)
            .map(|(r, label, l)| (label.map_or_else(|| format!("r{r}"), str::to_string), l.clone()))
            .collect();
        CertificateReport { rows, verified: certificate.verify(program) }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verified": self.verified,
            "rows": self.rows.iter().map(|(label, l)| json!({ "constraint": label, "multiplier": format_rational(l) })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualityReport {
    pub verdict: Verdict,
    /// Minimal total variation less one; `None` when not computed or undefined.
    pub measure: Option<Rational>,
    pub total_variation: Option<Rational>,
    pub witness: Option<Witness>,
    pub certificate: Option<CertificateReport>,
    pub notes: Vec<String>,
    pub lp_variables: usize,
    pub lp_rows: usize,
    pub fallback: Option<NumericFallback>,
}

impl ContextualityReport {
    pub fn is_contextual(&self) -> bool {
        self.verdict == Verdict::Contextual
    }

    /// JSON rendering; `system` supplies value labels for the witness.
    pub fn to_json(&self, system: &CCSystem) -> Value {
        let mut out = serde_json::Map::new();
        out.insert("verdict".into(), json!(self.verdict));
        if let Some(m) = &self.measure {
            out.insert("measure".into(), rational_json(m));
        }
        if let Some(tv) = &self.total_variation {
            out.insert("total_variation".into(), rational_json(tv));
        }
        match &self.witness {
            Some(Witness::Coupling(c)) => {
                out.insert("witness".into(), json!({ "kind": "coupling", "cells": cell_names(&c.cells), "distribution": witness_entries(system, &c.cells, c.dist.iter()) }));
            }
            Some(Witness::Quasi(q)) => {
                out.insert("witness".into(), json!({ "kind": "quasi-coupling", "cells": cell_names(&q.cells), "distribution": witness_entries(system, &q.cells, q.masses.iter()) }));
            }
            None => {}
        }
        if let Some(c) = &self.certificate {
            out.insert("certificate".into(), c.to_json());
        }
        if !self.notes.is_empty() {
            out.insert("notes".into(), json!(self.notes));
        }
        out.insert("lp".into(), json!({ "variables": self.lp_variables, "rows": self.lp_rows }));
        if let Some(f) = &self.fallback {
            out.insert("numeric_fallback".into(), json!(format!("{f:?}")));
        }
        Value::Object(out)
    }
}

fn cell_names(cells: &[Cell]) -> Vec<String> {
    cells.iter().map(Cell::to_string).collect()
}

fn witness_entries<'a>(
    system: &CCSystem,
    cells: &[Cell],
    masses: impl Iterator<Item = (&'a Outcome, &'a Rational)>,
) -> Value {
    let keys = cell_names(cells);
    let sets: Vec<&ValueSet> = cells.iter().map(|c| &system.value_sets()[&c.content]).collect();
    let masses: BTreeMap<Outcome, Rational> = masses.map(|(o, m)| (o.clone(), m.clone())).collect();
    // Signed masses cannot go through `Distribution`, so the entries are built directly.
    let entries = masses
        .iter()
        .map(|(o, p)| {
            let outcome: serde_json::Map<String, Value> =
                keys.iter().zip(&sets).zip(o).map(|((k, vs), v)| (k.clone(), json!(vs.label(*v)))).collect();
            json!({ "outcome": outcome, "p": format_rational(p) })
        })
        .collect();
    Value::Array(entries)
}

fn point_masses(shape: &[usize], point: &[Rational]) -> BTreeMap<Outcome, Rational> {
    crate::model::outcomes(shape).zip(point).filter(|(_, m)| !m.is_zero()).map(|(o, m)| (o, m.clone())).collect()
}

/// Decides noncontextuality by LP feasibility with nonnegative joint masses.
///
/// Noncontextual reports carry a witness coupling; contextual ones an exact
/// Farkas certificate over the labeled constraints.
pub fn check(system: &CCSystem, options: &AnalysisOptions) -> Result<ContextualityReport, Error> {
    let spec = build_coupling_spec(system, options)?;
    let program = spec.program(false);
    let solution = lp::solve(&program, options.mode)?;
    let mut report = ContextualityReport {
        verdict: Verdict::Noncontextual,
        measure: None,
        total_variation: None,
        witness: None,
        certificate: None,
        notes: Vec::new(),
        lp_variables: program.num_vars,
        lp_rows: program.constraints.len(),
        fallback: solution.fallback.clone(),
    };
    match solution.status {
        Status::Feasible | Status::Optimal => {
            let point = solution.point.expect("feasible solutions carry a point");
            let dist = Distribution::from_map_unchecked(spec.shape.clone(), point_masses(&spec.shape, &point));
            report.witness = Some(Witness::Coupling(SystemCoupling { cells: spec.cells, dist }));
        }
        Status::Infeasible => {
            let certificate = solution.certificate.expect("infeasible solutions carry a certificate");
            report.verdict = Verdict::Contextual;
            report.certificate = Some(CertificateReport::from_solution(&program, &certificate));
        }
        Status::Unbounded => unreachable!("feasibility programs have a zero objective"),
    }
    Ok(report)
}

/// Minimal total variation over quasi-couplings; the measure is that less one.
///
/// When some categorical connection has no multimaximal coupling at all the
/// system is contextual and the measure is left undefined.
pub fn measure(system: &CCSystem, options: &AnalysisOptions) -> Result<ContextualityReport, Error> {
    let spec = build_coupling_spec(system, options)?;
    let program = spec.program(true);
    let signed: Vec<usize> = (0..program.num_vars).collect();
    let solution = lp::minimize_l1(&program, &signed, options.mode)?;
    let mut report = ContextualityReport {
        verdict: Verdict::Noncontextual,
        measure: None,
        total_variation: None,
        witness: None,
        certificate: None,
        notes: Vec::new(),
        lp_variables: program.num_vars,
        lp_rows: program.constraints.len(),
        fallback: solution.fallback.clone(),
    };
    match solution.status {
        Status::Optimal | Status::Feasible => {
            let point = solution.point.expect("optimal solutions carry a point");
            let tv = solution.objective_value.expect("optimal solutions carry a value");
            let masses = point_masses(&spec.shape, &point);
            if tv.is_one() {
                let dist = Distribution::from_map_unchecked(spec.shape.clone(), masses);
                report.witness = Some(Witness::Coupling(SystemCoupling { cells: spec.cells, dist }));
            } else {
                report.verdict = Verdict::Contextual;
                report.witness = Some(Witness::Quasi(QuasiCoupling {
                    cells: spec.cells,
                    shape: spec.shape,
                    masses,
                    total_variation: tv.clone(),
                }));
            }
            report.measure = Some(&tv - Rational::one());
            report.total_variation = Some(tv);
        }
        Status::Infeasible => {
            report.verdict = Verdict::Contextual;
            let certificate = solution.certificate.expect("infeasible solutions carry a certificate");
            report.certificate = Some(CertificateReport::from_solution(&program, &certificate));
            for connection in system.connections() {
                if connection.is_binary() || connection.len() < 2 {
                    continue;
                }
                if let MultimaximalOutcome::Impossible(_) = coupling::multimaximal_exists(&connection, options)? {
                    report.notes.push(format!(
                        "connection {} has no multimaximal coupling; the measure is undefined",
                        connection.content
                    ));
                }
            }
            if report.notes.is_empty() {
                report.notes.push(
                    "no quasi-coupling with proper multimaximal connection subcouplings exists; the measure is undefined"
                        .into(),
                );
            }
        }
        Status::Unbounded => unreachable!("total variation is bounded below"),
    }
    Ok(report)
}

/// The system with the listed cells removed.
///
/// Bunches are marginalized over the remaining cells; bunches left empty drop
/// their context and contents left without cells are removed.
pub fn subsystem(system: &CCSystem, drop: &[Cell]) -> Result<CCSystem, Error> {
    if let Some(cell) = drop.iter().find(|c| !system.has_cell(c)) {
        return Err(ModelError::UnknownCell(cell.clone()).into());
    }
    let mut bunches = Vec::new();
    for bunch in system.bunches() {
        let keep: Vec<ContentId> = bunch
            .cells()
            .filter(|c| !drop.contains(c))
            .map(|c| c.content)
            .collect();
        if keep.is_empty() {
            continue;
        }
        let dist = bunch.marginal(&keep)?;
        bunches.push(Bunch { context: bunch.context.clone(), contents: keep, dist });
    }
    let contents: Vec<ContentId> = system
        .contents()
        .iter()
        .filter(|q| bunches.iter().any(|b| b.position(q).is_some()))
        .cloned()
        .collect();
    let value_sets = contents.iter().map(|q| (q.clone(), system.value_sets()[q].clone())).collect();
    Ok(CCSystem::from_parts_unchecked(contents, value_sets, bunches))
}

/// Result of re-checking every two-context subsystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairConsistencyReport {
    pub pairs_checked: usize,
    /// Context pairs whose two-context subsystem is already contextual.
    pub contextual_pairs: Vec<(ContextId, ContextId)>,
}

impl PairConsistencyReport {
    /// An empty list says nothing about the whole system, which may still be contextual.
    pub const NOTE: &'static str =
        "an empty list does not imply the system is noncontextual; contextuality can be global";

    pub fn to_json(&self) -> Value {
        json!({
            "pairs_checked": self.pairs_checked,
            "contextual_pairs": self.contextual_pairs.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "note": Self::NOTE,
        })
    }
}

/// Runs [`check`] on the subsystem formed by each pair of contexts.
pub fn check_pair_consistency(system: &CCSystem, options: &AnalysisOptions) -> Result<PairConsistencyReport, Error> {
    let contexts: Vec<ContextId> = system.contexts().cloned().collect();
    let mut report = PairConsistencyReport { pairs_checked: 0, contextual_pairs: Vec::new() };
    for i in 0..contexts.len() {
        for j in i + 1..contexts.len() {
            let drop: Vec<Cell> = system
                .cells()
                .into_iter()
                .filter(|c| c.context != contexts[i] && c.context != contexts[j])
                .collect();
            let pair = subsystem(system, &drop)?;
            report.pairs_checked += 1;
            if check(&pair, options)?.is_contextual() {
                report.contextual_pairs.push((contexts[i].clone(), contexts[j].clone()));
            }
        }
    }
    Ok(report)
}
