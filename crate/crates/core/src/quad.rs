//! Cubic-to-quadratic reduction: pick a minimum set of quadratic subterms
//! covering every cubic term, bound the Rosenberg penalty coefficient, and
//! emit the augmented QUBO model.
//!
//! Pair selection runs in three stages. A frequency-dominance filter forces
//! pairs that strictly dominate in every cubic term they appear in. A
//! set-cover presolve then removes subsumed candidate pairs and forces the
//! single remaining candidate of any term; both moves preserve at least one
//! minimum cover, and on sparse instances they resolve nearly everything.
//! Whatever survives goes to an exact branch-and-bound cover search.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::poly::Polynomial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadError {
    #[error("monomial of degree {degree} exceeds the cubic limit")]
    DegreeTooHigh { degree: usize },
    #[error("cubic term {term:?} is covered by no selected pair")]
    UncoveredTerm { term: [usize; 3] },
    #[error("{count} variables exceed the exhaustive-search limit of {max}")]
    TooManyVariables { count: usize, max: usize },
    #[error("plan does not match the polynomial: {reason}")]
    PlanMismatch { reason: String },
}

/// An unordered pair of distinct variables, stored with `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    first: usize,
    second: usize,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a != b && a >= 1 && b >= 1);
        if a < b {
            Self { first: a, second: b }
        } else {
            Self { first: b, second: a }
        }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn second(&self) -> usize {
        self.second
    }
}

impl std::fmt::Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x{}x{}", self.first, self.second)
    }
}

/// A degree-3 monomial with its aggregated coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CubicTerm {
    vars: [usize; 3],
    coefficient: i64,
}

impl CubicTerm {
    pub fn new(a: usize, b: usize, c: usize, coefficient: i64) -> Self {
        let mut vars = [a, b, c];
        vars.sort_unstable();
        assert!(vars[0] >= 1 && vars[0] < vars[1] && vars[1] < vars[2]);
        assert!(coefficient != 0, "cubic terms carry nonzero coefficients");
        Self { vars, coefficient }
    }

    pub fn vars(&self) -> [usize; 3] {
        self.vars
    }

    pub fn coefficient(&self) -> i64 {
        self.coefficient
    }

    pub fn pairs(&self) -> [Pair; 3] {
        let [i, j, k] = self.vars;
        [Pair::new(i, j), Pair::new(i, k), Pair::new(j, k)]
    }

    pub fn contains_pair(&self, pair: &Pair) -> bool {
        self.vars.contains(&pair.first) && self.vars.contains(&pair.second)
    }

    /// The variable of the term that is not part of `pair`.
    pub fn third_var(&self, pair: &Pair) -> usize {
        debug_assert!(self.contains_pair(pair));
        self.vars
            .iter()
            .copied()
            .find(|&v| v != pair.first && v != pair.second)
            .expect("pair is a 2-subset of the term")
    }
}

/// One cubic term together with the quadratic subterm chosen for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermAssignment {
    pub term: CubicTerm,
    pub pair: Pair,
}

/// The outcome of pair selection: which pairs become auxiliary variables,
/// which cubic term uses which pair, and the auxiliary index layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionPlan {
    num_vars: usize,
    selected_pairs: BTreeSet<Pair>,
    assignments: Vec<TermAssignment>,
    aux_index: BTreeMap<Pair, usize>,
    forced_pairs: BTreeSet<Pair>,
    residual_cover_size: usize,
}

impl SubstitutionPlan {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn selected_pairs(&self) -> &BTreeSet<Pair> {
        &self.selected_pairs
    }

    /// Pairs forced by the frequency-dominance rule (a subset of
    /// `selected_pairs`).
    pub fn forced_pairs(&self) -> &BTreeSet<Pair> {
        &self.forced_pairs
    }

    /// Cubic terms that reached the exact cover search.
    pub fn residual_cover_size(&self) -> usize {
        self.residual_cover_size
    }

    pub fn assignments(&self) -> &[TermAssignment] {
        &self.assignments
    }

    pub fn aux_count(&self) -> usize {
        self.selected_pairs.len()
    }

    /// 1-based auxiliary variable index of a selected pair. Indices are
    /// contiguous and start right after the original variables.
    pub fn aux_for(&self, pair: &Pair) -> Option<usize> {
        self.aux_index.get(pair).copied()
    }

    pub fn aux_index(&self) -> &BTreeMap<Pair, usize> {
        &self.aux_index
    }

    pub fn pair_for(&self, vars: [usize; 3]) -> Option<Pair> {
        self.assignments
            .iter()
            .find(|a| a.term.vars() == vars)
            .map(|a| a.pair)
    }
}

/// Collect the degree-3 monomials of `poly` with their coefficients.
pub fn extract_cubic_terms(poly: &Polynomial) -> Result<Vec<CubicTerm>, QuadError> {
    let mut cubics = Vec::new();
    for (monomial, coefficient) in poly.terms() {
        match monomial.degree() {
            0..=2 => {}
            3 => {
                let v = monomial.vars();
                cubics.push(CubicTerm::new(v[0], v[1], v[2], coefficient));
            }
            degree => return Err(QuadError::DegreeTooHigh { degree }),
        }
    }
    Ok(cubics)
}

/// Occurrence count of each quadratic subterm across the cubic terms.
pub fn pair_frequencies(cubics: &[CubicTerm]) -> BTreeMap<Pair, usize> {
    let mut freqs = BTreeMap::new();
    for term in cubics {
        for pair in term.pairs() {
            *freqs.entry(pair).or_insert(0) += 1;
        }
    }
    freqs
}

/// Frequency-dominance reduction, iterated to a fixed point.
///
/// A pair is forced when, in every cubic term containing it, its frequency
/// strictly exceeds the frequencies of both competing pairs. Terms covered
/// by a forced pair are removed, frequencies are recomputed, and the rule is
/// reapplied until nothing changes. Ties force nothing.
pub fn dominance_filter(cubics: &[CubicTerm]) -> (BTreeSet<Pair>, Vec<CubicTerm>) {
    let mut forced = BTreeSet::new();
    let mut remaining: Vec<CubicTerm> = cubics.to_vec();
    loop {
        let freqs = pair_frequencies(&remaining);
        let mut dominant: BTreeMap<Pair, bool> = BTreeMap::new();
        for term in &remaining {
            let pairs = term.pairs();
            for pair in pairs {
                let wins = pairs
                    .iter()
                    .filter(|q| **q != pair)
                    .all(|q| freqs[&pair] > freqs[q]);
                let entry = dominant.entry(pair).or_insert(true);
                *entry = *entry && wins;
            }
        }
        let newly: BTreeSet<Pair> = dominant
            .into_iter()
            .filter_map(|(p, ok)| ok.then_some(p))
            .collect();
        if newly.is_empty() {
            return (forced, remaining);
        }
        remaining.retain(|t| !newly.iter().any(|p| t.contains_pair(p)));
        forced.extend(newly);
    }
}

/// Exactness-preserving cover presolve.
///
/// Repeats two classic set-cover reductions until fixed point: a candidate
/// pair is dropped when another pair covers a superset of its terms (ties
/// keep the lexicographically smallest), and a term whose candidate list
/// shrinks to a single pair forces that pair. Terms covered by a forced
/// pair leave the pool. Every step keeps at least one minimum cover intact,
/// so the residual handed to the search still yields a global optimum.
pub fn cover_presolve(residual: &[CubicTerm]) -> (BTreeSet<Pair>, Vec<CubicTerm>) {
    let mut determined = BTreeSet::new();
    let mut remaining: Vec<CubicTerm> = residual.to_vec();
    loop {
        if remaining.is_empty() {
            return (determined, remaining);
        }
        let mut columns: BTreeMap<Pair, BTreeSet<[usize; 3]>> = BTreeMap::new();
        for term in &remaining {
            for pair in term.pairs() {
                columns.entry(pair).or_default().insert(term.vars());
            }
        }
        let dominated = |q: &Pair| -> bool {
            let terms_q = &columns[q];
            // A dominating pair must sit in every term of q, so it is one of
            // the two competitors inside q's first term.
            let first = *terms_q.iter().next().expect("pair has a home term");
            let term = remaining
                .iter()
                .find(|t| t.vars() == first)
                .expect("term still in pool");
            term.pairs().iter().any(|p| {
                if p == q {
                    return false;
                }
                let terms_p = &columns[p];
                terms_q.is_subset(terms_p) && (terms_q != terms_p || *p < *q)
            })
        };
        let mut forced_now = BTreeSet::new();
        for term in &remaining {
            let survivors: Vec<Pair> = term
                .pairs()
                .into_iter()
                .filter(|p| !dominated(p))
                .collect();
            if let [only] = survivors.as_slice() {
                forced_now.insert(*only);
            }
        }
        if forced_now.is_empty() {
            return (determined, remaining);
        }
        remaining.retain(|t| !forced_now.iter().any(|p| t.contains_pair(p)));
        determined.extend(forced_now);
    }
}

/// Exact minimum-cardinality cover of the residual cubic terms.
///
/// Presolves, splits the terms into connected components (terms are
/// connected when they share a pair), and runs a depth-first branch and
/// bound per component: greedy cover as the initial incumbent, branching on
/// the term with the fewest surviving candidates, pruning with
/// `ceil(uncovered / best-possible-coverage)`.
pub fn solve_min_cover(residual: &[CubicTerm], forced: &BTreeSet<Pair>) -> BTreeSet<Pair> {
    debug_assert!(
        residual
            .iter()
            .all(|t| !forced.iter().any(|p| t.contains_pair(p))),
        "residual terms must not contain forced pairs"
    );
    let (mut cover, remaining) = cover_presolve(residual);
    for component in components(&remaining) {
        cover.extend(min_cover_component(&component));
    }
    cover
}

fn components(terms: &[CubicTerm]) -> Vec<Vec<CubicTerm>> {
    let n = terms.len();
    let mut by_pair: BTreeMap<Pair, Vec<usize>> = BTreeMap::new();
    for (idx, term) in terms.iter().enumerate() {
        for pair in term.pairs() {
            by_pair.entry(pair).or_default().push(idx);
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut component = Vec::new();
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            component.push(idx);
            for pair in terms[idx].pairs() {
                for &other in &by_pair[&pair] {
                    if !seen[other] {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
        }
        component.sort_unstable();
        out.push(component.into_iter().map(|i| terms[i]).collect());
    }
    out
}

fn min_cover_component(terms: &[CubicTerm]) -> BTreeSet<Pair> {
    assert!(
        terms.len() <= 128,
        "cover component of {} terms exceeds the exact-search limit",
        terms.len()
    );
    if terms.is_empty() {
        return BTreeSet::new();
    }
    // coverage bitmask per candidate pair
    let mut masks: BTreeMap<Pair, u128> = BTreeMap::new();
    for (idx, term) in terms.iter().enumerate() {
        for pair in term.pairs() {
            *masks.entry(pair).or_insert(0) |= 1u128 << idx;
        }
    }
    let candidates: Vec<(Pair, u128)> = masks.into_iter().collect();
    let full: u128 = if terms.len() == 128 {
        u128::MAX
    } else {
        (1u128 << terms.len()) - 1
    };

    // greedy incumbent: most new coverage first, lexicographic on ties
    let mut greedy: Vec<Pair> = Vec::new();
    let mut covered = 0u128;
    while covered != full {
        let (pair, mask) = candidates
            .iter()
            .max_by_key(|(p, m)| ((m & !covered).count_ones(), std::cmp::Reverse(*p)))
            .expect("every term contributes candidates");
        greedy.push(*pair);
        covered |= mask;
    }
    let mut best: (usize, Vec<Pair>) = (greedy.len(), greedy);

    fn dfs(
        uncovered: u128,
        chosen: &mut Vec<Pair>,
        best: &mut (usize, Vec<Pair>),
        terms: &[CubicTerm],
        candidates: &[(Pair, u128)],
    ) {
        if uncovered == 0 {
            if chosen.len() < best.0 {
                *best = (chosen.len(), chosen.clone());
            }
            return;
        }
        let max_cover = candidates
            .iter()
            .map(|(_, m)| (m & uncovered).count_ones() as usize)
            .max()
            .unwrap_or(0);
        if max_cover == 0 {
            return;
        }
        let bound = chosen.len() + (uncovered.count_ones() as usize).div_ceil(max_cover);
        if bound >= best.0 {
            return;
        }
        // branch on the uncovered term with the fewest candidates
        let (term_idx, _) = (0..terms.len())
            .filter(|i| uncovered >> i & 1 == 1)
            .map(|i| {
                let options = terms[i]
                    .pairs()
                    .iter()
                    .filter(|p| candidates.iter().any(|(c, _)| c == *p))
                    .count();
                (i, options)
            })
            .min_by_key(|&(i, options)| (options, i))
            .expect("uncovered term exists");
        let mut branches: Vec<(Pair, u128)> = terms[term_idx]
            .pairs()
            .iter()
            .filter_map(|p| {
                candidates
                    .iter()
                    .find(|(c, _)| c == p)
                    .map(|&(c, m)| (c, m))
            })
            .collect();
        branches.sort_by_key(|(p, m)| (std::cmp::Reverse((m & uncovered).count_ones()), *p));
        for (pair, mask) in branches {
            chosen.push(pair);
            dfs(uncovered & !mask, chosen, best, terms, candidates);
            chosen.pop();
        }
    }

    let mut chosen = Vec::new();
    dfs(full, &mut chosen, &mut best, terms, &candidates);
    best.1.into_iter().collect()
}

/// Give every cubic term exactly one selected pair and lay out auxiliary
/// indices. When several selected pairs cover a term, the one with the
/// highest global frequency wins, then the lexicographically smallest.
/// Auxiliary indices follow lexicographic pair order, starting at
/// `num_vars + 1`.
pub fn assign_terms(
    cubics: &[CubicTerm],
    selected: &BTreeSet<Pair>,
    num_vars: usize,
) -> Result<SubstitutionPlan, QuadError> {
    let freqs = pair_frequencies(cubics);
    let mut sorted: Vec<CubicTerm> = cubics.to_vec();
    sorted.sort_unstable();
    let mut assignments = Vec::with_capacity(sorted.len());
    for term in sorted {
        let pair = term
            .pairs()
            .into_iter()
            .filter(|p| selected.contains(p))
            .min_by_key(|p| (std::cmp::Reverse(freqs[p]), *p))
            .ok_or(QuadError::UncoveredTerm { term: term.vars() })?;
        assignments.push(TermAssignment { term, pair });
    }
    let aux_index: BTreeMap<Pair, usize> = selected
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, num_vars + 1 + i))
        .collect();
    Ok(SubstitutionPlan {
        num_vars,
        selected_pairs: selected.clone(),
        assignments,
        aux_index,
        forced_pairs: BTreeSet::new(),
        residual_cover_size: cubics.len(),
    })
}

/// Full pair-selection pipeline: dominance filter, cover presolve, exact
/// cover on the residue, then term assignment.
pub fn plan_substitutions(
    cubics: &[CubicTerm],
    num_vars: usize,
) -> Result<SubstitutionPlan, QuadError> {
    let (forced, residual) = dominance_filter(cubics);
    let (determined, to_search) = cover_presolve(&residual);
    let mut selected: BTreeSet<Pair> = forced.iter().chain(determined.iter()).copied().collect();
    selected.extend(solve_min_cover(&to_search, &selected));
    let mut plan = assign_terms(cubics, &selected, num_vars)?;
    debug_assert!(
        plan.selected_pairs
            .iter()
            .all(|p| plan.assignments.iter().any(|a| a.pair == *p)),
        "every selected pair should carry at least one term"
    );
    plan.forced_pairs = forced;
    plan.residual_cover_size = to_search.len();
    Ok(plan)
}

/// Closed-form penalty lower bound: for each selected pair, sum the
/// coefficients of the cubic terms assigned to it; take the largest of all
/// sums and their negations, floored at 1 so consistency stays enforced.
pub fn penalty_lower_bound(plan: &SubstitutionPlan) -> i64 {
    let mut sums: BTreeMap<Pair, i64> = BTreeMap::new();
    for assignment in &plan.assignments {
        *sums.entry(assignment.pair).or_insert(0) += assignment.term.coefficient();
    }
    sums.values()
        .map(|&s| s.max(-s))
        .max()
        .unwrap_or(1)
        .max(1)
}

const ORACLE_VAR_LIMIT: usize = 30;

/// Exhaustive penalty-bound oracle: maximizes, over all assignments of the
/// involved original and auxiliary variables with strictly positive total
/// penalty, the ratio of recovered cubic value to penalty. Returns 0 when
/// no assignment attains a positive denominator and positive numerator.
pub fn penalty_lower_bound_oracle(
    plan: &SubstitutionPlan,
    cubics: &[CubicTerm],
) -> Result<Ratio<i64>, QuadError> {
    let mut vars: BTreeSet<usize> = BTreeSet::new();
    for term in cubics {
        vars.extend(term.vars());
    }
    let pairs: Vec<Pair> = plan.selected_pairs.iter().copied().collect();
    let total = vars.len() + pairs.len();
    if total > ORACLE_VAR_LIMIT {
        return Err(QuadError::TooManyVariables {
            count: total,
            max: ORACLE_VAR_LIMIT,
        });
    }
    if cubics.is_empty() {
        return Ok(Ratio::from_integer(0));
    }
    let var_pos: BTreeMap<usize, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let pair_pos = |p: &Pair| -> usize {
        vars.len() + pairs.iter().position(|q| q == p).expect("selected pair")
    };
    // (i, j, k, y, coefficient) as bit positions, one per cubic term
    let terms: Vec<(usize, usize, usize, usize, i64)> = cubics
        .iter()
        .map(|t| {
            let pair = plan
                .pair_for(t.vars())
                .expect("plan assigns every cubic term");
            let [a, b, c] = t.vars();
            (
                var_pos[&a],
                var_pos[&b],
                var_pos[&c],
                pair_pos(&pair),
                t.coefficient(),
            )
        })
        .collect();
    // third-variable position per term, relative to its assigned pair
    let extras: Vec<(usize, usize)> = cubics
        .iter()
        .map(|t| {
            let pair = plan.pair_for(t.vars()).expect("assigned");
            (var_pos[&t.third_var(&pair)], pair_pos(&pair))
        })
        .collect();
    let blocks: Vec<(usize, usize, usize)> = pairs
        .iter()
        .map(|p| (var_pos[&p.first], var_pos[&p.second], pair_pos(p)))
        .collect();

    let evaluate = |mask: u64| -> Option<(i64, i64)> {
        let bit = |pos: usize| mask >> pos & 1 == 1;
        let mut denominator: i64 = 0;
        for &(i, j, y) in &blocks {
            let (xi, xj, yb) = (bit(i) as i64, bit(j) as i64, bit(y) as i64);
            denominator += xi * xj - 2 * xi * yb - 2 * xj * yb + 3 * yb;
        }
        if denominator <= 0 {
            return None;
        }
        let mut numerator: i64 = 0;
        for (t, &(i, j, k, y, coeff)) in terms.iter().enumerate() {
            let cubic = (bit(i) && bit(j) && bit(k)) as i64;
            let (xk, yb) = (bit(extras[t].0) as i64, bit(y) as i64);
            numerator += coeff * (cubic - yb * xk);
        }
        Some((numerator, denominator))
    };

    // max over positive-denominator assignments, exact rational compare
    let better = |a: Option<(i64, i64)>, b: Option<(i64, i64)>| -> Option<(i64, i64)> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some((an, ad)), Some((bn, bd))) => {
                let lhs = an as i128 * bd as i128;
                let rhs = bn as i128 * ad as i128;
                match lhs.cmp(&rhs) {
                    std::cmp::Ordering::Greater => Some((an, ad)),
                    std::cmp::Ordering::Less => Some((bn, bd)),
                    // identical value: canonical representative
                    std::cmp::Ordering::Equal => Some(std::cmp::min((ad, an), (bd, bn)))
                        .map(|(d, n)| (n, d)),
                }
            }
        }
    };

    let span = 1u64 << total;
    let best = if total <= 16 {
        (0..span).map(evaluate).fold(None, better)
    } else {
        let chunk_bits = total - 8;
        (0u64..256)
            .into_par_iter()
            .map(|hi| {
                let base = hi << chunk_bits;
                (0..1u64 << chunk_bits)
                    .map(|lo| evaluate(base | lo))
                    .fold(None, better)
            })
            .reduce(|| None, better)
    };
    let result = match best {
        Some((n, d)) => Ratio::new(n, d),
        None => Ratio::from_integer(0),
    };
    Ok(result.max(Ratio::from_integer(0)))
}

/// Which original variables a substitution replaces and the auxiliary that
/// stands in for their product (all indices 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substitution {
    pub first: usize,
    pub second: usize,
    pub aux: usize,
}

/// Where a model came from, for decoding solutions back to clause counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_name: String,
    pub num_vars: usize,
    pub num_clauses: usize,
}

/// An upper-triangular QUBO to be maximized: `offset + x^T Q x` with linear
/// coefficients on the diagonal. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuboModel {
    size: usize,
    q: BTreeMap<(usize, usize), i64>,
    offset: i64,
    penalty_m: i64,
    var_names: Vec<String>,
    substitutions: Vec<Substitution>,
    provenance: Option<Provenance>,
}

impl QuboModel {
    pub fn new(size: usize, offset: i64, penalty_m: i64) -> Self {
        Self {
            size,
            q: BTreeMap::new(),
            offset,
            penalty_m,
            var_names: (1..=size).map(|i| format!("x{i}")).collect(),
            substitutions: Vec::new(),
            provenance: None,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn penalty_m(&self) -> i64 {
        self.penalty_m
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn set_var_names(&mut self, names: Vec<String>) {
        assert_eq!(names.len(), self.size);
        self.var_names = names;
    }

    pub fn substitutions(&self) -> &[Substitution] {
        &self.substitutions
    }

    pub fn set_substitutions(&mut self, subs: Vec<Substitution>) {
        self.substitutions = subs;
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn set_provenance(&mut self, provenance: Provenance) {
        self.provenance = Some(provenance);
    }

    /// 0-based upper-triangular coefficient; `(i, j)` is normalized.
    pub fn coeff(&self, i: usize, j: usize) -> i64 {
        let key = (i.min(j), i.max(j));
        self.q.get(&key).copied().unwrap_or(0)
    }

    pub fn add_coeff(&mut self, i: usize, j: usize, delta: i64) {
        assert!(i < self.size && j < self.size);
        if delta == 0 {
            return;
        }
        let key = (i.min(j), i.max(j));
        let entry = self.q.entry(key).or_insert(0);
        *entry = entry.checked_add(delta).expect("Q coefficient overflow");
        if *entry == 0 {
            self.q.remove(&key);
        }
    }

    /// Nonzero entries in deterministic (row, column) order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), i64)> + '_ {
        self.q.iter().map(|(&k, &v)| (k, v))
    }

    pub fn dense(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![0; self.size]; self.size];
        for ((i, j), v) in self.entries() {
            out[i][j] = v;
        }
        out
    }

    /// Raw objective `x^T Q x`.
    pub fn evaluate(&self, bits: &[bool]) -> i64 {
        assert_eq!(bits.len(), self.size);
        let mut total: i64 = 0;
        for ((i, j), v) in self.entries() {
            if bits[i] && bits[j] {
                total = total.checked_add(v).expect("objective overflow");
            }
        }
        total
    }

    pub fn total_value(&self, bits: &[bool]) -> i64 {
        self.evaluate(bits) + self.offset
    }

    /// Variables touched by any nonzero coefficient.
    pub fn nodes(&self) -> usize {
        let mut touched = vec![false; self.size];
        for ((i, j), _) in self.entries() {
            touched[i] = true;
            touched[j] = true;
        }
        touched.iter().filter(|&&t| t).count()
    }

    /// Nonzero off-diagonal entries.
    pub fn edges(&self) -> usize {
        self.entries().filter(|((i, j), _)| i != j).count()
    }

    /// True when every Rosenberg block evaluates to zero, i.e. each
    /// auxiliary equals the product of its pair.
    pub fn penalty_clean(&self, bits: &[bool]) -> bool {
        self.substitutions.iter().all(|s| {
            bits[s.aux - 1] == (bits[s.first - 1] && bits[s.second - 1])
        })
    }
}

/// Rosenberg quadratization: replace each cubic term by its auxiliary times
/// the leftover variable and add the penalty block
/// `-M (x_i x_j - 2 x_i y - 2 x_j y + 3 y)` for every selected pair.
pub fn quadratize(
    poly: &Polynomial,
    plan: &SubstitutionPlan,
    penalty_m: i64,
) -> Result<QuboModel, QuadError> {
    assert!(penalty_m >= 1, "penalty coefficient must be positive");
    if poly.num_vars() > plan.num_vars() {
        return Err(QuadError::PlanMismatch {
            reason: format!(
                "polynomial spans {} variables, plan covers {}",
                poly.num_vars(),
                plan.num_vars()
            ),
        });
    }
    let n = plan.num_vars();
    let size = n + plan.aux_count();
    let mut model = QuboModel::new(size, 0, penalty_m);
    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    for pair in plan.aux_index().keys() {
        names.push(format!("y{}_{}", pair.first(), pair.second()));
    }
    model.set_var_names(names);
    model.set_substitutions(
        plan.aux_index()
            .iter()
            .map(|(pair, &aux)| Substitution {
                first: pair.first(),
                second: pair.second(),
                aux,
            })
            .collect(),
    );

    let mut offset = 0i64;
    for (monomial, coefficient) in poly.terms() {
        match monomial.vars() {
            [] => offset += coefficient,
            [i] => model.add_coeff(i - 1, i - 1, coefficient),
            [i, j] => model.add_coeff(i - 1, j - 1, coefficient),
            [i, j, k] => {
                let vars = [*i, *j, *k];
                let pair = plan.pair_for(vars).ok_or_else(|| QuadError::PlanMismatch {
                    reason: format!("no assignment for cubic term x{i}x{j}x{k}"),
                })?;
                let aux = plan.aux_for(&pair).expect("selected pair has an index");
                let term = CubicTerm::new(vars[0], vars[1], vars[2], coefficient);
                let third = term.third_var(&pair);
                model.add_coeff(third - 1, aux - 1, coefficient);
            }
            vars => {
                return Err(QuadError::DegreeTooHigh { degree: vars.len() });
            }
        }
    }
    for (pair, &aux) in plan.aux_index() {
        let (i, j, y) = (pair.first() - 1, pair.second() - 1, aux - 1);
        model.add_coeff(i, j, -penalty_m);
        model.add_coeff(i, y, 2 * penalty_m);
        model.add_coeff(j, y, 2 * penalty_m);
        model.add_coeff(y, y, -3 * penalty_m);
    }
    model.offset = offset;
    Ok(model)
}
