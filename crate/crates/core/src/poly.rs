//! Multilinear pseudo-Boolean polynomials over binary variables and the
//! clause-reward construction that turns a 3-SAT formula into a cubic
//! objective whose value equals the number of satisfied clauses.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::cnf::{Clause, CnfInstance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable {variable} has no assigned value")]
    UnassignedVariable { variable: usize },
    #[error("term of degree {degree} exceeds the cubic limit")]
    DegreeTooHigh { degree: usize },
    #[error("line {line_no}: malformed term `{line}`")]
    MalformedLine { line_no: usize, line: String },
}

/// A product of distinct variables, kept sorted. The empty monomial is the
/// constant term. `x_i^2` normalizes to `x_i`, so repeats are dropped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    vars: Vec<usize>,
}

impl Monomial {
    pub fn new(vars: impl IntoIterator<Item = usize>) -> Self {
        let mut vars: Vec<usize> = vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        assert!(vars.first().is_none_or(|&v| v >= 1), "variables are 1-based");
        Self { vars }
    }

    pub fn constant() -> Self {
        Self { vars: Vec::new() }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    /// Union of the two variable sets (the product of multilinear monomials).
    pub fn product(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.vars.iter().chain(other.vars.iter()).copied())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            return write!(f, "1");
        }
        for (i, v) in self.vars.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "x{v}")?;
        }
        Ok(())
    }
}

/// A multilinear polynomial with integer coefficients. Zero-coefficient
/// terms are never stored. Coefficient arithmetic is checked: the library
/// panics on overflow instead of wrapping silently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, i64>,
    num_vars: usize,
}

impl Polynomial {
    /// The zero polynomial over variables `1..=num_vars`.
    pub fn zero(num_vars: usize) -> Self {
        Self {
            terms: BTreeMap::new(),
            num_vars,
        }
    }

    pub fn constant(value: i64, num_vars: usize) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::constant(), value);
        p
    }

    pub fn variable(index: usize, num_vars: usize) -> Self {
        assert!(index >= 1 && index <= num_vars);
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::new([index]), 1);
        p
    }

    /// Variable universe `1..=num_vars`; variables may be absent from every
    /// term, the universe keeps assignment vectors aligned across modules.
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> i64 {
        self.terms.get(monomial).copied().unwrap_or(0)
    }

    pub fn constant_part(&self) -> i64 {
        self.coefficient(&Monomial::constant())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Add `coefficient * monomial`, dropping the entry if it cancels.
    pub fn add_term(&mut self, monomial: Monomial, coefficient: i64) {
        if coefficient == 0 {
            return;
        }
        if let Some(&v) = monomial.vars().last() {
            self.num_vars = self.num_vars.max(v);
        }
        let entry = self.terms.entry(monomial).or_insert(0);
        *entry = entry
            .checked_add(coefficient)
            .expect("polynomial coefficient overflow");
        if *entry == 0 {
            let key = self
                .terms
                .iter()
                .find(|(_, &c)| c == 0)
                .map(|(m, _)| m.clone())
                .expect("zero entry just created");
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        self.num_vars = self.num_vars.max(other.num_vars);
        for (m, c) in other.terms() {
            self.add_term(m.clone(), c);
        }
    }

    pub fn scale(&mut self, factor: i64) {
        if factor == 0 {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c = c.checked_mul(factor).expect("polynomial coefficient overflow");
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars.max(other.num_vars));
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                let coeff = ca.checked_mul(cb).expect("polynomial coefficient overflow");
                out.add_term(ma.product(mb), coeff);
            }
        }
        out
    }

    /// Exact integer evaluation. The assignment must cover every variable
    /// that appears in a term; the universe may be wider than the vector.
    pub fn evaluate(&self, assignment: &[bool]) -> Result<i64, PolyError> {
        let mut total: i64 = 0;
        for (m, c) in self.terms() {
            let mut all = true;
            for &v in m.vars() {
                match assignment.get(v - 1) {
                    Some(true) => {}
                    Some(false) => {
                        all = false;
                        break;
                    }
                    None => return Err(PolyError::UnassignedVariable { variable: v }),
                }
            }
            if all {
                total = total.checked_add(c).expect("polynomial value overflow");
            }
        }
        Ok(total)
    }
}

/// Indicator polynomial of a clause: evaluates to 1 exactly on satisfying
/// assignments and 0 otherwise.
///
/// Built as `1 - prod(1 - v(l))` where `v` maps a positive literal to `x`
/// and a negated one to `1 - x`; expanding the product specializes to the
/// four reward shapes for 3-literal clauses and handles shorter clauses
/// with the same construction.
pub fn clause_reward(clause: &Clause) -> Polynomial {
    let num_vars = clause
        .literals()
        .iter()
        .map(|l| l.variable())
        .max()
        .unwrap_or(0);
    let mut falsified = Polynomial::constant(1, num_vars);
    for lit in clause.literals() {
        // 1 - v(l): for a positive literal this is 1 - x, for a negated
        // literal 1 - (1 - x) = x.
        let mut factor = Polynomial::zero(num_vars);
        if lit.negated() {
            factor.add_term(Monomial::new([lit.variable()]), 1);
        } else {
            factor.add_term(Monomial::constant(), 1);
            factor.add_term(Monomial::new([lit.variable()]), -1);
        }
        falsified = falsified.mul(&factor);
    }
    let mut reward = Polynomial::constant(1, num_vars);
    falsified.scale(-1);
    reward.add_assign(&falsified);
    reward
}

/// Sum of clause rewards over the instance. For every assignment the value
/// equals `count_satisfied`; the degree is at most 3.
pub fn build_objective(instance: &CnfInstance) -> Polynomial {
    let mut objective = Polynomial::zero(instance.num_vars());
    for clause in instance.clauses() {
        objective.add_assign(&clause_reward(clause));
    }
    objective
}

/// Parse the plain-text cubic polynomial format: one term per line as
/// `<coefficient> [<var> [<var> [<var>]]]`, `#` starts a comment, blank
/// lines are skipped, repeated terms aggregate.
pub fn parse_cubic_poly(text: &str) -> Result<Polynomial, PolyError> {
    let mut poly = Polynomial::zero(0);
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        let malformed = || PolyError::MalformedLine {
            line_no,
            line: raw.trim().to_string(),
        };
        let coefficient: i64 = first.parse().map_err(|_| malformed())?;
        let mut vars = Vec::new();
        for tok in tokens {
            let v: usize = tok.parse().map_err(|_| malformed())?;
            if v == 0 {
                return Err(malformed());
            }
            vars.push(v);
        }
        if vars.len() > 3 {
            return Err(PolyError::DegreeTooHigh { degree: vars.len() });
        }
        let monomial = Monomial::new(vars.iter().copied());
        if monomial.degree() != vars.len() {
            // repeated variable on one line, e.g. "1 2 2"
            return Err(malformed());
        }
        poly.add_term(monomial, coefficient);
    }
    Ok(poly)
}
