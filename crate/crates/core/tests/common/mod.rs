//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the simplex: feasibility and L1 optima of small
//! systems `A x = b` are found by enumerating basic solutions directly.
#![allow(dead_code)]

use cbd_core::rational::{rat, Rational};
use num_traits::{One, Signed, Zero};

/// Rank of a dense rational matrix.
pub fn rank(a: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                for k in c..cols {
                    let d = &f * &m[r][k];
                    m[i][k] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

/// Unique solution of `A_S x = b` over the columns `S`, if the columns are
/// independent and the system is consistent.
fn solve_on(a: &[Vec<Rational>], b: &[Rational], cols: &[usize]) -> Option<Vec<Rational>> {
    let k = cols.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| cols.iter().map(|&j| row[j].clone()).chain(std::iter::once(bi.clone())).collect())
        .collect();
    let mut r = 0;
    for c in 0..k {
        let p = (r..m.len()).find(|&i| !m[i][c].is_zero())?;
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for v in m[r].iter_mut() {
            *v /= &pivot;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for t in 0..=k {
                    let d = &f * &m[r][t];
                    m[i][t] -= d;
                }
            }
        }
        r += 1;
    }
    if m[r..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    Some(m[..k].iter().map(|row| row[k].clone()).collect())
}

fn combinations(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if pick.len() == k {
            f(pick);
            return;
        }
        for i in start..=(n - (k - pick.len())) {
            pick.push(i);
            rec(i + 1, n, k, pick, f);
            pick.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Every basic solution of `A x = b` (as full-length vectors).
pub fn basic_solutions(a: &[Vec<Rational>], b: &[Rational]) -> Vec<Vec<Rational>> {
    let n = a.first().map_or(0, Vec::len);
    let r = rank(a);
    let mut out = Vec::new();
    combinations(n, r, &mut |cols| {
        if let Some(xs) = solve_on(a, b, cols) {
            let mut x = vec![Rational::zero(); n];
            for (&j, v) in cols.iter().zip(xs) {
                x[j] = v;
            }
            out.push(x);
        }
    });
    out
}

/// A nonnegative solution of `A x = b`, if any (some vertex is one).
pub fn nonnegative_solution(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    basic_solutions(a, b).into_iter().find(|x| x.iter().all(|v| !v.is_negative()))
}

/// `min Σ|x_j|` over `A x = b`. A vertex of the split program `A(u - w) = b`
/// never uses both `u_j` and `w_j`, so the minimum is attained at a basic
/// solution of `A x = b` itself.
pub fn min_l1(a: &[Vec<Rational>], b: &[Rational]) -> Option<Rational> {
    basic_solutions(a, b).into_iter().map(|x| x.iter().map(|v| v.abs()).sum::<Rational>()).min()
}

/// The PR box restricted to one value per content: 16 joint assignments of
/// `q1..q4` (index `8 q1 + 4 q2 + 2 q3 + q4`, value 0 or 1) and one equation
/// per bunch outcome.
pub fn pr_box_content_level() -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let half = rat(1, 2);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..4 {
        let j = (i + 1) % 4;
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let row = (0..16)
                .map(|s: usize| {
                    let v = |q: usize| (s >> (3 - q)) & 1;
                    if v(i) == x && v(j) == y {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            a.push(row);
            let equal = x == y;
            let anti = i == 3;
            b.push(if equal != anti { half.clone() } else { Rational::zero() });
        }
    }
    (a, b)
}
