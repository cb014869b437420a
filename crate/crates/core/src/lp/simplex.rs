//! Revised primal simplex on `min c·x, A x = b, x ≥ 0, b ≥ 0`.
//!
//! The basis inverse is kept as a dense `m × m` matrix and updated in product
//! form. Columns `n..n+m` are artificial unit columns, one per row; they only
//! ever leave the basis. Phase 1 minimizes the sum of basic artificials,
//! phase 2 the real objective.

use super::scalar::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct StdForm<T> {
    pub m: usize,
    pub n: usize,
    /// Sparse columns: `(row, coefficient)`.
    pub cols: Vec<Vec<(usize, T)>>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> StdForm<T> {
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> StdForm<U> {
        StdForm {
            m: self.m,
            n: self.n,
            cols: self.cols.iter().map(|col| col.iter().map(|(i, a)| (*i, f(a))).collect()).collect(),
            b: self.b.iter().map(&f).collect(),
            c: self.c.iter().map(&f).collect(),
        }
    }

    fn column(&self, j: usize) -> ColumnRef<'_, T> {
        if j < self.n {
            ColumnRef::Real(&self.cols[j])
        } else {
            ColumnRef::Unit(j - self.n)
        }
    }
}

enum ColumnRef<'a, T> {
    Real(&'a [(usize, T)]),
    Unit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pricing {
    /// Smallest-index entering and leaving variables; never cycles.
    Bland,
    /// Most negative reduced cost.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) struct Simplex<'a, T> {
    sf: &'a StdForm<T>,
    binv: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// Basis position of each column, if basic.
    position: Vec<Option<usize>>,
    xb: Vec<T>,
    pub pivots: usize,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    /// Starting basis: a unit slack column where one exists, else the artificial.
    pub fn new(sf: &'a StdForm<T>) -> Self {
        let mut basis: Vec<usize> = (0..sf.m).map(|i| sf.n + i).collect();
        let mut taken = vec![false; sf.m];
        for (j, col) in sf.cols.iter().enumerate() {
            if let [(i, a)] = col.as_slice() {
                if a.is_one() && !taken[*i] {
                    taken[*i] = true;
                    basis[*i] = j;
                }
            }
        }
        let mut position = vec![None; sf.n + sf.m];
        for (i, &j) in basis.iter().enumerate() {
            position[j] = Some(i);
        }
        let mut binv = vec![vec![T::zero(); sf.m]; sf.m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Simplex { sf, binv, basis, position, xb: sf.b.clone(), pivots: 0 }
    }

    /// Starts from a given basis (e.g. one found in floating point). Returns
    /// `None` when the basis is singular or not primal feasible.
    pub fn with_basis(sf: &'a StdForm<T>, basis: &[usize]) -> Option<Self> {
        if basis.len() != sf.m || basis.iter().any(|&j| j >= sf.n + sf.m) {
            return None;
        }
        let mut position = vec![None; sf.n + sf.m];
        for (i, &j) in basis.iter().enumerate() {
            if position[j].replace(i).is_some() {
                return None;
            }
        }
        let mut s = Simplex {
            sf,
            binv: Vec::new(),
            basis: basis.to_vec(),
            position,
            xb: Vec::new(),
            pivots: 0,
        };
        if !s.refactor() {
            return None;
        }
        if s.xb.iter().any(Scalar::is_negative) {
            return None;
        }
        Some(s)
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Recomputes the basis inverse and basic values from scratch by
    /// Gauss-Jordan elimination. Returns false if the basis is singular.
    fn refactor(&mut self) -> bool {
        let m = self.sf.m;
        // Augmented [B | I], row-major.
        let mut mat = vec![vec![T::zero(); 2 * m]; m];
        for (pos, &j) in self.basis.iter().enumerate() {
            match self.sf.column(j) {
                ColumnRef::Real(col) => {
                    for (i, a) in col {
                        mat[*i][pos] = a.clone();
                    }
                }
                ColumnRef::Unit(i) => mat[i][pos] = T::one(),
            }
        }
        for (i, row) in mat.iter_mut().enumerate() {
            row[m + i] = T::one();
        }
        for col in 0..m {
            let pivot_row = if T::EXACT {
                (col..m).find(|&r| !mat[r][col].is_zero())
            } else {
                (col..m)
                    .filter(|&r| !mat[r][col].is_zero())
                    .max_by(|&a, &b| mat[a][col].magnitude().total_cmp(&mat[b][col].magnitude()))
            };
            let Some(p) = pivot_row else { return false };
            mat.swap(col, p);
            let piv = mat[col][col].clone();
            for v in mat[col].iter_mut() {
                if !v.is_zero() {
                    *v = v.div(&piv);
                }
            }
            let pivot = mat[col].clone();
            let nz: Vec<usize> = (0..2 * m).filter(|&k| !pivot[k].is_zero()).collect();
            for (r, row) in mat.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let f = row[col].clone();
                for &k in &nz {
                    row[k].sub_mul(&f, &pivot[k]);
                    row[k].flush();
                }
            }
        }
        // Row `pos` of B^{-1} belongs to the basic variable at position `pos`.
        self.binv = mat.into_iter().map(|row| row[m..].to_vec()).collect();
        self.xb = (0..m)
            .map(|i| {
                let mut v = T::zero();
                for (k, bk) in self.sf.b.iter().enumerate() {
                    if !bk.is_zero() && !self.binv[i][k].is_zero() {
                        v = v.add(&self.binv[i][k].mul(bk));
                    }
                }
                v
            })
            .collect();
        true
    }

    fn cost(&self, j: usize, phase_one: bool) -> T {
        if phase_one {
            if j >= self.sf.n {
                T::one()
            } else {
                T::zero()
            }
        } else if j >= self.sf.n {
            T::zero()
        } else {
            self.sf.c[j].clone()
        }
    }

    /// Simplex multipliers `y = c_B B^{-1}`.
    pub fn duals(&self, phase_one: bool) -> Vec<T> {
        let m = self.sf.m;
        let mut y = vec![T::zero(); m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cj = self.cost(j, phase_one);
            if cj.is_zero() {
                continue;
            }
            for (yk, bik) in y.iter_mut().zip(&self.binv[i]) {
                if !bik.is_zero() {
                    *yk = yk.add(&cj.mul(bik));
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[T], phase_one: bool) -> T {
        let mut d = self.cost(j, phase_one);
        match self.sf.column(j) {
            ColumnRef::Real(col) => {
                for (i, a) in col {
                    d.sub_mul(&y[*i], a);
                }
            }
            ColumnRef::Unit(i) => d = d.sub(&y[i]),
        }
        d
    }

    /// `B^{-1} A_j`
    fn ftran(&self, j: usize) -> Vec<T> {
        match self.sf.column(j) {
            ColumnRef::Real(col) => self
                .binv
                .iter()
                .map(|row| {
                    let mut v = T::zero();
                    for (k, a) in col {
                        let r = &row[*k];
                        if !r.is_zero() {
                            v = v.add(&r.mul(a));
                        }
                    }
                    v
                })
                .collect(),
            ColumnRef::Unit(k) => self.binv.iter().map(|row| row[k].clone()).collect(),
        }
    }

    fn pivot(&mut self, r: usize, entering: usize, alpha: &[T]) {
        let piv = alpha[r].clone();
        for v in self.binv[r].iter_mut() {
            if !v.is_zero() {
                *v = v.div(&piv);
            }
        }
        self.xb[r] = self.xb[r].div(&piv);
        let pivot_row = self.binv[r].clone();
        let nz: Vec<usize> = (0..self.sf.m).filter(|&k| !pivot_row[k].is_zero()).collect();
        let xr = self.xb[r].clone();
        for (i, f) in alpha.iter().enumerate() {
            if i == r || f.is_zero() {
                continue;
            }
            let row = &mut self.binv[i];
            for &k in &nz {
                row[k].sub_mul(f, &pivot_row[k]);
                row[k].flush();
            }
            self.xb[i].sub_mul(f, &xr);
            self.xb[i].flush();
            if !T::EXACT && self.xb[i].is_negative() {
                // Round-off may push a basic value slightly below zero.
                self.xb[i] = T::zero();
            }
        }
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[entering] = Some(r);
        self.basis[r] = entering;
        self.pivots += 1;
    }

    fn choose_entering(&self, y: &[T], phase_one: bool, rule: Pricing) -> Option<(usize, T)> {
        let candidates = (0..self.sf.n).filter(|&j| self.position[j].is_none());
        match rule {
            Pricing::Bland => candidates
                .map(|j| (j, self.reduced_cost(j, y, phase_one)))
                .find(|(_, d)| d.is_negative()),
            Pricing::Dantzig => {
                let mut best: Option<(usize, T)> = None;
                for j in candidates {
                    let d = self.reduced_cost(j, y, phase_one);
                    if d.is_negative() && best.as_ref().is_none_or(|(_, bd)| d.lt(bd)) {
                        best = Some((j, d));
                    }
                }
                best
            }
        }
    }

    /// Minimum-ratio row; ties go to the smallest basic column index.
    fn choose_leaving(&self, alpha: &[T]) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, a) in alpha.iter().enumerate() {
            if !a.is_positive() {
                continue;
            }
            let ratio = self.xb[i].div(a);
            let better = match &best {
                None => true,
                Some((bi, br)) => {
                    if T::EXACT {
                        ratio.lt(br) || (!br.lt(&ratio) && self.basis[i] < self.basis[*bi])
                    } else {
                        let diff = ratio.sub(br);
                        diff.is_negative() || (diff.is_zero() && self.basis[i] < self.basis[*bi])
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn iterate(&mut self, phase_one: bool, rule: Pricing, limit: Option<usize>) -> Termination {
        let mut y = self.duals(phase_one);
        let mut since_refresh = 0usize;
        loop {
            if limit.is_some_and(|l| self.pivots >= l) {
                return Termination::IterationLimit;
            }
            if !T::EXACT && since_refresh >= 64 {
                if !self.refactor() {
                    return Termination::IterationLimit;
                }
                y = self.duals(phase_one);
                since_refresh = 0;
            }
            let Some((entering, d)) = self.choose_entering(&y, phase_one, rule) else {
                return Termination::Optimal;
            };
            let alpha = self.ftran(entering);
            let Some(r) = self.choose_leaving(&alpha) else {
                return Termination::Unbounded;
            };
            self.pivot(r, entering, &alpha);
            since_refresh += 1;
            // y' = y + d_q * (new row r of B^{-1}) zeroes the entering reduced cost.
            let neg_d = T::zero().sub(&d);
            for (yk, bk) in y.iter_mut().zip(&self.binv[r]) {
                if !bk.is_zero() {
                    yk.sub_mul(&neg_d, bk);
                    yk.flush();
                }
            }
        }
    }

    fn phase_one_value(&self) -> T {
        let mut w = T::zero();
        for (i, &j) in self.basis.iter().enumerate() {
            if j >= self.sf.n {
                w = w.add(&self.xb[i]);
            }
        }
        w
    }

    /// Pivots zero-valued artificials out of the basis where a real column can
    /// replace them; the rest sit on redundant rows and stay at zero.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.sf.m {
            if self.basis[r] < self.sf.n {
                continue;
            }
            let row = self.binv[r].clone();
            let replacement = (0..self.sf.n).filter(|&j| self.position[j].is_none()).find(|&j| {
                let mut v = T::zero();
                for (k, a) in &self.sf.cols[j] {
                    if !row[*k].is_zero() {
                        v = v.add(&row[*k].mul(a));
                    }
                }
                !v.is_zero()
            });
            if let Some(j) = replacement {
                let alpha = self.ftran(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    /// Runs both phases.
    pub fn run(&mut self, rule: Pricing, limit: Option<usize>, has_objective: bool) -> Termination {
        if self.basis.iter().any(|&j| j >= self.sf.n) {
            match self.iterate(true, rule, limit) {
                Termination::Optimal => {}
                Termination::Unbounded => unreachable!("phase one is bounded below by zero"),
                other => return other,
            }
            if !self.phase_one_value().is_zero() {
                return Termination::Infeasible;
            }
            self.drive_out_artificials();
        }
        if !has_objective {
            return Termination::Optimal;
        }
        self.iterate(false, rule, limit)
    }

    /// Values of the `n` real columns.
    pub fn point(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.sf.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.sf.n {
                x[j] = self.xb[i].clone();
            }
        }
        x
    }
}
