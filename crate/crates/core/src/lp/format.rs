use std::fmt::Write;

use num_traits::{One, Signed, Zero};

use super::LinearProgram;
use crate::rational::{format_rational, Rational};

/// Renders `lp` in a CPLEX-like text form with exact `p/q` coefficients.
pub fn write_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    push_terms(&mut out, &lp.objective);
    out.push_str("\nSubject To\n");
    for (r, c) in lp.constraints.iter().enumerate() {
        let name = c.label.clone().unwrap_or_else(|| format!("r{r}"));
        let _ = write!(out, " {}:", sanitize(&name));
        push_terms(&mut out, &c.terms);
        let _ = writeln!(out, " {} {}", c.relation, format_rational(&c.rhs));
    }
    out.push_str("Bounds\n");
    for (j, b) in lp.bounds.iter().enumerate() {
        match (&b.lower, &b.upper) {
            (Some(l), None) if l.is_zero() => {}
            (None, None) => {
                let _ = writeln!(out, " x{j} free");
            }
            (l, u) => {
                let lo = l.as_ref().map_or("-inf".to_string(), format_rational);
                let hi = u.as_ref().map_or("+inf".to_string(), format_rational);
                let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn push_terms(out: &mut String, terms: &[(usize, Rational)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, (j, a)) in terms.iter().enumerate() {
        let sign = if a.is_negative() { " -" } else if k == 0 { "" } else { " +" };
        let mag = a.abs();
        if mag.is_one() {
            let _ = write!(out, "{sign} x{j}");
        } else {
            let _ = write!(out, "{sign} {} x{j}", format_rational(&mag));
        }
    }
}

/// Row names may not contain whitespace or `:` in the LP format.
fn sanitize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_whitespace() || c == ':' {
            if !out.ends_with('_') {
                out.push('_');
            }
        } else {
            out.push(c);
        }
    }
    out
}
