//! Exact rational linear programming.
//!
//! [`solve`] runs a revised primal simplex with Bland's rule over arbitrary
//! precision rationals. In [`SolveMode::FloatThenVerify`] a double precision
//! simplex first looks for the final basis; that basis is then refactorized in
//! rationals and the exact simplex continues from it, so the returned status,
//! point and objective are always exact. Infeasible programs come with a
//! Farkas certificate that [`FarkasCertificate::verify`] re-checks exactly.

mod format;
mod scalar;
mod simplex;

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, Rational};
use scalar::FLOAT_EPS;
use simplex::{Pricing, Simplex, StdForm, Termination};

pub use format::write_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// `Σ coef·x[var]  (relation)  rhs`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
    pub label: Option<String>,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        Constraint { terms, relation, rhs, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(j, a)| a * &x[*j]).sum()
    }
}

/// Variable bounds; `None` means unbounded in that direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bound {
    pub fn nonnegative() -> Self {
        Bound { lower: Some(Rational::zero()), upper: None }
    }

    pub fn free() -> Self {
        Bound { lower: None, upper: None }
    }

    pub fn between(lower: Rational, upper: Rational) -> Self {
        Bound { lower: Some(lower), upper: Some(upper) }
    }
}

/// `minimize objective·x` subject to sparse rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    /// `num_vars` nonnegative variables, no constraints, zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            constraints: Vec::new(),
            objective: Vec::new(),
            bounds: vec![Bound::nonnegative(); num_vars],
        }
    }

    pub fn add_var(&mut self, bound: Bound) -> usize {
        self.bounds.push(bound);
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> usize {
        self.constraints.push(constraint);
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
    }

    pub fn check(&self) -> Result<(), LpError> {
        if self.bounds.len() != self.num_vars {
            return Err(LpError::DimensionMismatch(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.terms.is_empty() {
                return Err(LpError::EmptyRow(r));
            }
            if let Some((j, _)) = c.terms.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(LpError::DimensionMismatch(format!(
                    "row {r} references x{j} but there are {} variables",
                    self.num_vars
                )));
            }
        }
        if let Some((j, _)) = self.objective.iter().find(|(j, _)| *j >= self.num_vars) {
            return Err(LpError::DimensionMismatch(format!("objective references x{j}")));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(LpError::InvalidBounds(j));
                }
            }
        }
        Ok(())
    }

    /// Objective value at `x`.
    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, a)| a * &x[*j]).sum()
    }

    /// Exact check of every constraint and bound; returns the first violated item.
    pub fn verify_point(&self, x: &[Rational]) -> Result<(), String> {
        if x.len() != self.num_vars {
            return Err(format!("point has {} entries, expected {}", x.len(), self.num_vars));
        }
        for (j, (b, v)) in self.bounds.iter().zip(x).enumerate() {
            if b.lower.as_ref().is_some_and(|l| v < l) || b.upper.as_ref().is_some_and(|u| v > u) {
                return Err(format!("x{j} = {} violates its bounds", format_rational(v)));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            let lhs = c.lhs(x);
            let ok = match c.relation {
                Relation::Eq => lhs == c.rhs,
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
            };
            if !ok {
                return Err(format!(
                    "row {r}: {} {} {} fails",
                    format_rational(&lhs),
                    c.relation,
                    format_rational(&c.rhs)
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint row {0} has no terms")]
    EmptyRow(usize),
    #[error("variable x{0} has lower bound above upper bound")]
    InvalidBounds(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// A minimizer of a nonzero objective.
    Optimal,
    /// A feasible point of a program with zero objective.
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    Exact,
    /// Double precision simplex, then exact refactorization and verification.
    FloatThenVerify,
}

/// Why a float-then-verify solve had to start the exact simplex from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NumericFallback {
    /// The float run hit its iteration cap.
    IterationLimit,
    /// Constraint residual of the float point was not below `1e-9`.
    Residual(String),
    /// The float basis was singular or infeasible in exact arithmetic.
    BasisRejected,
}

/// Multipliers `λ` (one per constraint) proving infeasibility.
///
/// Sign rules: `λ_r ≥ 0` on `≥` rows, `λ_r ≤ 0` on `≤` rows, free on `=` rows.
/// Every feasible `x` then satisfies `g·x ≥ λ·b` with `g = Σ λ_r a_r`, which
/// is impossible when `max { g·x : x within bounds } < λ·b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rational>,
}

impl FarkasCertificate {
    /// Exact re-check against `lp`.
    pub fn verify(&self, lp: &LinearProgram) -> bool {
        if self.multipliers.len() != lp.constraints.len() {
            return false;
        }
        let mut g = vec![Rational::zero(); lp.num_vars];
        let mut lambda_b = Rational::zero();
        for (c, l) in lp.constraints.iter().zip(&self.multipliers) {
            let sign_ok = match c.relation {
                Relation::Eq => true,
                Relation::Ge => !l.is_negative(),
                Relation::Le => !l.is_positive(),
            };
            if !sign_ok {
                return false;
            }
            if l.is_zero() {
                continue;
            }
            for (j, a) in &c.terms {
                g[*j] += a * l;
            }
            lambda_b += &c.rhs * l;
        }
        let mut max = Rational::zero();
        for (gj, b) in g.iter().zip(&lp.bounds) {
            let bound = if gj.is_positive() {
                &b.upper
            } else if gj.is_negative() {
                &b.lower
            } else {
                continue;
            };
            match bound {
                Some(v) => max += gj * v,
                None => return false,
            }
        }
        max < lambda_b
    }

    /// Nonzero multipliers with their row labels, for reports.
    pub fn rows<'a>(&'a self, lp: &'a LinearProgram) -> impl Iterator<Item = (usize, Option<&'a str>, &'a Rational)> {
        self.multipliers
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_zero())
            .map(move |(r, l)| (r, lp.constraints[r].label.as_deref(), l))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LPSolution {
    pub status: Status,
    /// Present for `Optimal` and `Feasible`.
    pub point: Option<Vec<Rational>>,
    pub objective_value: Option<Rational>,
    /// Present for `Infeasible`.
    pub certificate: Option<FarkasCertificate>,
    /// Optimal constraint multipliers (same sign rules as the certificate),
    /// present for `Optimal`.
    pub duals: Option<Vec<Rational>>,
    pub fallback: Option<NumericFallback>,
    pub pivots: usize,
}

impl LPSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, Status::Optimal | Status::Feasible)
    }
}

/// How each original variable maps onto standard-form columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = offset + s`
    Shifted { col: usize, offset: Rational },
    /// `x = offset - s`
    Negated { col: usize, offset: Rational },
    /// `x = s⁺ - s⁻`
    Split { plus: usize, minus: usize },
}

struct Standardized {
    sf: StdForm<Rational>,
    vars: Vec<VarMap>,
    /// For each original constraint: its standard-form row and the sign applied to it.
    rows: Vec<(usize, bool)>,
    objective_offset: Rational,
}

fn standardize(lp: &LinearProgram) -> Standardized {
    let mut vars = Vec::with_capacity(lp.num_vars);
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &lp.bounds {
        let map = match (&b.lower, &b.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    upper_rows.push((ncols, u - l));
                }
                VarMap::Shifted { col: ncols, offset: l.clone() }
            }
            (None, Some(u)) => VarMap::Negated { col: ncols, offset: u.clone() },
            (None, None) => {
                ncols += 1;
                VarMap::Split { plus: ncols - 1, minus: ncols }
            }
        };
        ncols += 1;
        vars.push(map);
    }
    let structural = ncols;
    let m = lp.constraints.len() + upper_rows.len();
    let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); structural];
    let mut b = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(lp.constraints.len());

    for (r, c) in lp.constraints.iter().enumerate() {
        let mut rhs = c.rhs.clone();
        let mut entries: Vec<(usize, Rational)> = Vec::with_capacity(c.terms.len() + 1);
        for (j, a) in &c.terms {
            match &vars[*j] {
                VarMap::Shifted { col, offset } => {
                    rhs -= a * offset;
                    entries.push((*col, a.clone()));
                }
                VarMap::Negated { col, offset } => {
                    rhs -= a * offset;
                    entries.push((*col, -a));
                }
                VarMap::Split { plus, minus } => {
                    entries.push((*plus, a.clone()));
                    entries.push((*minus, -a));
                }
            }
        }
        match c.relation {
            Relation::Eq => {}
            Relation::Le => {
                cols.push(Vec::new());
                entries.push((cols.len() - 1, Rational::one()));
            }
            Relation::Ge => {
                cols.push(Vec::new());
                entries.push((cols.len() - 1, -Rational::one()));
            }
        }
        let flip = rhs.is_negative();
        if flip {
            rhs = -rhs;
        }
        for (col, a) in entries {
            let a = if flip { -a } else { a };
            push_entry(&mut cols[col], r, a);
        }
        b.push(rhs);
        rows.push((r, flip));
    }
    for (k, (col, width)) in upper_rows.into_iter().enumerate() {
        let row = lp.constraints.len() + k;
        cols[col].push((row, Rational::one()));
        cols.push(vec![(row, Rational::one())]);
        b.push(width);
    }

    let n = cols.len();
    let mut c = vec![Rational::zero(); n];
    let mut objective_offset = Rational::zero();
    for (j, a) in &lp.objective {
        match &vars[*j] {
            VarMap::Shifted { col, offset } => {
                objective_offset += a * offset;
                c[*col] += a;
            }
            VarMap::Negated { col, offset } => {
                objective_offset += a * offset;
                c[*col] -= a;
            }
            VarMap::Split { plus, minus } => {
                c[*plus] += a;
                c[*minus] -= a;
            }
        }
    }
    for col in cols.iter_mut() {
        col.retain(|(_, a)| !a.is_zero());
    }
    Standardized { sf: StdForm { m, n, cols, b, c }, vars, rows, objective_offset }
}

/// Merges repeated variables within one row.
fn push_entry(col: &mut Vec<(usize, Rational)>, row: usize, a: Rational) {
    match col.last_mut() {
        Some((r, v)) if *r == row => *v += a,
        _ => col.push((row, a)),
    }
}

impl Standardized {
    fn original_point(&self, s: &[Rational]) -> Vec<Rational> {
        self.vars
            .iter()
            .map(|v| match v {
                VarMap::Shifted { col, offset } => offset + &s[*col],
                VarMap::Negated { col, offset } => offset - &s[*col],
                VarMap::Split { plus, minus } => &s[*plus] - &s[*minus],
            })
            .collect()
    }

    /// Maps standard-form row multipliers back onto the original constraints.
    fn original_multipliers(&self, y: &[Rational]) -> Vec<Rational> {
        self.rows.iter().map(|&(i, flip)| if flip { -&y[i] } else { y[i].clone() }).collect()
    }
}

/// Solves `lp` exactly. `mode` only changes how the final basis is found.
pub fn solve(lp: &LinearProgram, mode: SolveMode) -> Result<LPSolution, LpError> {
    lp.check()?;
    let std = standardize(lp);
    let has_objective = std.sf.c.iter().any(|v| !v.is_zero());

    let mut fallback = None;
    let mut float_pivots = 0;
    let warm_basis = match mode {
        SolveMode::Exact => None,
        SolveMode::FloatThenVerify => match float_basis(&std.sf, has_objective) {
            Ok((basis, pivots)) => {
                float_pivots = pivots;
                Some(basis)
            }
            Err(reason) => {
                fallback = Some(reason);
                None
            }
        },
    };

    let mut simplex = match warm_basis.as_deref().map(|b| Simplex::with_basis(&std.sf, b)) {
        Some(Some(s)) => s,
        Some(None) => {
            fallback = Some(NumericFallback::BasisRejected);
            Simplex::new(&std.sf)
        }
        None => Simplex::new(&std.sf),
    };
    let termination = simplex.run(Pricing::Bland, None, has_objective);
    let pivots = simplex.pivots + float_pivots;

    let solution = match termination {
        Termination::Optimal => {
            let point = std.original_point(&simplex.point());
            let objective_value = lp.objective_at(&point);
            debug_assert_eq!(
                objective_value,
                &std.objective_offset + &std.sf.c.iter().zip(simplex.point()).map(|(c, s)| c * s).sum::<Rational>()
            );
            let (status, duals) = if has_objective {
                (Status::Optimal, Some(std.original_multipliers(&simplex.duals(false))))
            } else {
                (Status::Feasible, None)
            };
            LPSolution {
                status,
                point: Some(point),
                objective_value: Some(objective_value),
                certificate: None,
                duals,
                fallback,
                pivots,
            }
        }
        Termination::Infeasible => {
            let y = simplex.duals(true);
            LPSolution {
                status: Status::Infeasible,
                point: None,
                objective_value: None,
                certificate: Some(FarkasCertificate { multipliers: std.original_multipliers(&y) }),
                duals: None,
                fallback,
                pivots,
            }
        }
        Termination::Unbounded => LPSolution {
            status: Status::Unbounded,
            point: None,
            objective_value: None,
            certificate: None,
            duals: None,
            fallback,
            pivots,
        },
        Termination::IterationLimit => unreachable!("the exact simplex runs without a pivot cap"),
    };
    Ok(solution)
}

/// Double precision run; returns its final basis when the float point passes
/// the residual test.
fn float_basis(sf: &StdForm<Rational>, has_objective: bool) -> Result<(Vec<usize>, usize), NumericFallback> {
    let fsf: StdForm<f64> = sf.map(<f64 as scalar::Scalar>::from_rational);
    let mut simplex = Simplex::new(&fsf);
    let cap = 50 * (fsf.m + fsf.n) + 1000;
    let termination = simplex.run(Pricing::Dantzig, Some(cap), has_objective);
    if termination == Termination::IterationLimit {
        return Err(NumericFallback::IterationLimit);
    }
    if termination == Termination::Optimal {
        let x = simplex.point();
        let mut residual = fsf.b.clone();
        for (j, col) in fsf.cols.iter().enumerate() {
            for (i, a) in col {
                residual[*i] -= a * x[j];
            }
        }
        let worst = residual.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if residual.iter().any(|r| r.is_nan()) || worst >= FLOAT_EPS {
            return Err(NumericFallback::Residual(format!("{worst:e}")));
        }
    }
    Ok((simplex.basis().to_vec(), simplex.pivots))
}

/// Minimizes `Σ |x_j|` over `signed_vars`, each split as `u - w` with `u, w ≥ 0`.
///
/// Every row and bound of `lp` is kept; its objective is replaced. The returned
/// point is in the original variables and `objective_value` is the L1 norm.
pub fn minimize_l1(lp: &LinearProgram, signed_vars: &[usize], mode: SolveMode) -> Result<LPSolution, LpError> {
    lp.check()?;
    if let Some(&j) = signed_vars.iter().find(|&&j| j >= lp.num_vars) {
        return Err(LpError::DimensionMismatch(format!("signed variable x{j} out of range")));
    }
    let mut split = lp.clone();
    let mut minus_of = vec![None; lp.num_vars];
    for &j in signed_vars {
        if minus_of[j].is_some() {
            continue;
        }
        split.bounds[j] = Bound::nonnegative();
        minus_of[j] = Some(split.add_var(Bound::nonnegative()));
    }
    for c in split.constraints.iter_mut() {
        let extra: Vec<(usize, Rational)> =
            c.terms.iter().filter_map(|(j, a)| minus_of[*j].map(|w| (w, -a))).collect();
        c.terms.extend(extra);
    }
    split.objective = minus_of
        .iter()
        .enumerate()
        .filter_map(|(j, w)| w.map(|w| [(j, Rational::one()), (w, Rational::one())]))
        .flatten()
        .collect();

    let mut solution = solve(&split, mode)?;
    if let Some(point) = solution.point.take() {
        let original: Vec<Rational> = (0..lp.num_vars)
            .map(|j| match minus_of[j] {
                Some(w) => &point[j] - &point[w],
                None => point[j].clone(),
            })
            .collect();
        let l1: Rational = signed_vars
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|&j| original[j].abs())
            .sum();
        debug_assert_eq!(Some(&l1), solution.objective_value.as_ref());
        solution.objective_value = Some(l1);
        solution.point = Some(original);
        // An empty signed set leaves nothing to minimize.
        if signed_vars.is_empty() {
            solution.status = Status::Feasible;
        }
    }
    Ok(solution)
}
