//! Compile Max 3-SAT instances (and cubic pseudo-Boolean polynomials) into
//! compact QUBO models and solve them.
//!
//! The pipeline: parse DIMACS ([`cnf`]), turn every clause into an indicator
//! polynomial and aggregate ([`poly`]), pick a minimum set of quadratic
//! subterms to stand in for the cubic terms and apply the Rosenberg penalty
//! construction ([`quad`]), then maximize the resulting model exactly or by
//! tabu search ([`solver`]). [`pipeline`] wires the stages together behind a
//! file-oriented API, and [`generate`] provides seeded random instances for
//! hermetic benchmarks.

pub mod cnf;
pub mod generate;
pub mod pipeline;
pub mod poly;
pub mod quad;
pub mod solver;

pub use cnf::{parse_dimacs, Clause, CnfError, CnfInstance, Literal};
pub use poly::{build_objective, clause_reward, parse_cubic_poly, Monomial, PolyError, Polynomial};
pub use quad::{
    assign_terms, cover_presolve, dominance_filter, extract_cubic_terms, pair_frequencies,
    penalty_lower_bound, penalty_lower_bound_oracle, plan_substitutions, quadratize, CubicTerm,
    Pair, Provenance, QuadError, QuboModel, SubstitutionPlan, Substitution,
};
pub use solver::{
    brute_force, decode, tabu_search, SearchLimits, Solution, SolveError, SolveReport,
};
