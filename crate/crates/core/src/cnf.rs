//! DIMACS CNF parsing and clause-level evaluation for Max 3-SAT instances.

use thiserror::Error;

/// Errors raised while parsing DIMACS input or evaluating instances.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("missing `p cnf <vars> <clauses>` header")]
    MissingHeader,
    #[error("header declares {declared} clauses but input contains {parsed}")]
    ClauseCountMismatch { declared: usize, parsed: usize },
    #[error("literal {literal} references a variable outside 1..={num_vars}")]
    VariableOutOfRange { literal: i64, num_vars: usize },
    #[error("clause has {len} literals, at most 3 are supported")]
    OversizedClause { len: usize },
    #[error("variable {variable} appears more than once in a clause")]
    DuplicateVariableInClause { variable: usize },
    #[error("malformed token `{token}`")]
    MalformedToken { token: String },
    #[error("formula declares no clauses")]
    EmptyFormula,
    #[error("assignment has {got} bits but the instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
}

/// A positive or negated occurrence of a 1-based variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    variable: usize,
    negated: bool,
}

impl Literal {
    /// `variable` is 1-based and must be nonzero.
    pub fn new(variable: usize, negated: bool) -> Self {
        assert!(variable >= 1, "variables are 1-based");
        Self { variable, negated }
    }

    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn negated(&self) -> bool {
        self.negated
    }

    /// Truth value under `assignment` (indexed by variable - 1).
    pub fn eval(&self, assignment: &[bool]) -> bool {
        assignment[self.variable - 1] != self.negated
    }

    /// Signed DIMACS encoding: negative means negated.
    pub fn to_dimacs(&self) -> i64 {
        let v = self.variable as i64;
        if self.negated {
            -v
        } else {
            v
        }
    }
}

/// A disjunction of one to three literals over distinct variables.
///
/// Duplicate variables are rejected outright, which also rules out
/// tautological `x OR NOT x` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Result<Self, CnfError> {
        if literals.is_empty() {
            return Err(CnfError::MalformedToken {
                token: "empty clause".into(),
            });
        }
        if literals.len() > 3 {
            return Err(CnfError::OversizedClause {
                len: literals.len(),
            });
        }
        for (i, lit) in literals.iter().enumerate() {
            for other in &literals[i + 1..] {
                if lit.variable() == other.variable() {
                    return Err(CnfError::DuplicateVariableInClause {
                        variable: lit.variable(),
                    });
                }
            }
        }
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }
}

/// A parsed 3-SAT formula: `num_vars` variables and at least one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
    source_name: String,
}

impl CnfInstance {
    pub fn new(
        num_vars: usize,
        clauses: Vec<Clause>,
        source_name: impl Into<String>,
    ) -> Result<Self, CnfError> {
        if clauses.is_empty() {
            return Err(CnfError::EmptyFormula);
        }
        for clause in &clauses {
            for lit in clause.literals() {
                if lit.variable() > num_vars {
                    return Err(CnfError::VariableOutOfRange {
                        literal: lit.to_dimacs(),
                        num_vars,
                    });
                }
            }
        }
        Ok(Self {
            num_vars,
            clauses,
            source_name: source_name.into(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// Number of clauses with at least one true literal under `assignment`.
    pub fn count_satisfied(&self, assignment: &[bool]) -> Result<usize, CnfError> {
        if assignment.len() != self.num_vars {
            return Err(CnfError::LengthMismatch {
                expected: self.num_vars,
                got: assignment.len(),
            });
        }
        Ok(self
            .clauses
            .iter()
            .filter(|c| c.is_satisfied_by(assignment))
            .count())
    }

    /// Serialize back to DIMACS. `parse_dimacs` on the output yields an
    /// instance equal to `self` (up to the source name).
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "p cnf {} {}\n",
            self.num_vars,
            self.clauses.len()
        ));
        for clause in &self.clauses {
            for lit in clause.literals() {
                out.push_str(&format!("{} ", lit.to_dimacs()));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parse DIMACS CNF text.
///
/// Comment lines start with `c`, exactly one `p cnf <n> <m>` header precedes
/// the clauses, and each clause is a run of nonzero integers terminated by
/// `0`, possibly spanning lines. A `%` token ends the clause section (some
/// benchmark files carry a `%` / `0` trailer).
pub fn parse_dimacs(text: &str, source_name: &str) -> Result<CnfInstance, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut done = false;

    'lines: for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::MalformedToken {
                    token: trimmed.to_string(),
                });
            }
            let mut parts = trimmed.split_whitespace();
            parts.next(); // "p"
            if parts.next() != Some("cnf") {
                return Err(CnfError::MalformedToken {
                    token: trimmed.to_string(),
                });
            }
            let n = parse_count(parts.next())?;
            let m = parse_count(parts.next())?;
            if parts.next().is_some() {
                return Err(CnfError::MalformedToken {
                    token: trimmed.to_string(),
                });
            }
            header = Some((n, m));
            continue;
        }
        let (num_vars, _) = match header {
            Some(h) => h,
            None => {
                if trimmed.trim().is_empty() {
                    continue;
                }
                return Err(CnfError::MissingHeader);
            }
        };
        for token in trimmed.split_whitespace() {
            if token == "%" {
                done = true;
                break 'lines;
            }
            let value: i64 = token.parse().map_err(|_| CnfError::MalformedToken {
                token: token.to_string(),
            })?;
            if value == 0 {
                let clause = Clause::new(std::mem::take(&mut current))?;
                clauses.push(clause);
                continue;
            }
            let var = value.unsigned_abs() as usize;
            if var > num_vars {
                return Err(CnfError::VariableOutOfRange {
                    literal: value,
                    num_vars,
                });
            }
            current.push(Literal::new(var, value < 0));
        }
    }
    let _ = done;

    let (num_vars, declared) = header.ok_or(CnfError::MissingHeader)?;
    if !current.is_empty() {
        return Err(CnfError::MalformedToken {
            token: "<eof>".into(),
        });
    }
    if declared == 0 {
        return Err(CnfError::EmptyFormula);
    }
    if clauses.len() != declared {
        return Err(CnfError::ClauseCountMismatch {
            declared,
            parsed: clauses.len(),
        });
    }
    CnfInstance::new(num_vars, clauses, source_name)
}

fn parse_count(token: Option<&str>) -> Result<usize, CnfError> {
    let token = token.ok_or_else(|| CnfError::MalformedToken {
        token: "<missing header field>".into(),
    })?;
    token.parse().map_err(|_| CnfError::MalformedToken {
        token: token.to_string(),
    })
}
