//! Exact and heuristic maximization of QUBO models, plus decoding of
//! solutions back to clause-satisfaction counts.
//!
//! The heuristic is a 1-flip tabu search with incremental delta evaluation:
//! per-variable tenure drawn uniformly from [10, 30], aspiration whenever a
//! move beats the incumbent, a restart every `10 * size` non-improving
//! iterations, an elite pool of eight solutions, and greedy path relinking
//! between random elite pairs at each restart.

use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cnf::CnfInstance;
use crate::quad::QuboModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("model with {size} variables exceeds the exhaustive limit of {max}")]
    TooLarge { size: usize, max: usize },
    #[error("model provenance does not match instance `{instance}`")]
    ProvenanceMismatch { instance: String },
}

/// A full assignment of the model's variables with its objective value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub bits: Vec<bool>,
    pub raw_value: i64,
    pub total_value: i64,
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub best: Solution,
    /// Clause count after projecting onto the original variables; filled in
    /// by the pipeline for models derived from a CNF instance.
    pub decoded_satisfied: Option<usize>,
    /// All Rosenberg penalty blocks evaluate to zero.
    pub penalty_clean: bool,
    /// Wall-clock seconds; reported as 0 in iteration-budget mode so equal
    /// seeds and budgets yield byte-identical reports.
    pub elapsed: f64,
    pub seed: u64,
    pub iterations: u64,
}

const BRUTE_FORCE_LIMIT: usize = 30;

/// Exhaustive maximization for models of at most 30 variables. Ties go to
/// the lexicographically smallest bit vector.
pub fn brute_force(model: &QuboModel) -> Result<Solution, SolveError> {
    let size = model.size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(SolveError::TooLarge {
            size,
            max: BRUTE_FORCE_LIMIT,
        });
    }
    if size == 0 {
        return Ok(Solution {
            bits: Vec::new(),
            raw_value: 0,
            total_value: model.offset(),
        });
    }
    let tables = Tables::new(model);
    // Split the space on the high bits and gray-code through each chunk;
    // the reduction is a value-then-lexicographic max, so the parallel
    // result is identical to the sequential one.
    let chunk_bits = size.min(18);
    let prefixes: u64 = 1 << (size - chunk_bits);
    let best = (0..prefixes)
        .into_par_iter()
        .map(|prefix| scan_chunk(&tables, prefix << chunk_bits, chunk_bits))
        .reduce_with(|a, b| {
            match b.0.cmp(&a.0) {
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Equal => {
                    if lex_key(b.1, tables.size) < lex_key(a.1, tables.size) {
                        b
                    } else {
                        a
                    }
                }
            }
        })
        .expect("at least one chunk");
    let bits: Vec<bool> = (0..size).map(|i| best.1 >> i & 1 == 1).collect();
    Ok(Solution {
        bits,
        raw_value: best.0,
        total_value: best.0 + model.offset(),
    })
}

/// Bit-reversed mask so numeric order equals lexicographic order on the
/// bit vector (index 0 is the most significant position).
fn lex_key(mask: u64, size: usize) -> u64 {
    mask.reverse_bits() >> (64 - size)
}

fn scan_chunk(tables: &Tables, base: u64, chunk_bits: usize) -> (i64, u64) {
    let mut state = FlipState::new(tables, base);
    let mut best = (state.value, base);
    let mut mask = base;
    for counter in 1u64..1 << chunk_bits {
        let flip = counter.trailing_zeros() as usize;
        state.flip(flip);
        mask ^= 1 << flip;
        if state.value > best.0
            || (state.value == best.0 && lex_key(mask, tables.size) < lex_key(best.1, tables.size))
        {
            best = (state.value, mask);
        }
    }
    best
}

/// Symmetric adjacency view of the upper-triangular model.
struct Tables {
    size: usize,
    diag: Vec<i64>,
    neighbors: Vec<Vec<(usize, i64)>>,
    offset: i64,
}

impl Tables {
    fn new(model: &QuboModel) -> Self {
        let size = model.size();
        let mut diag = vec![0i64; size];
        let mut neighbors: Vec<Vec<(usize, i64)>> = vec![Vec::new(); size];
        for ((i, j), v) in model.entries() {
            if i == j {
                diag[i] = v;
            } else {
                neighbors[i].push((j, v));
                neighbors[j].push((i, v));
            }
        }
        Self {
            size,
            diag,
            neighbors,
            offset: model.offset(),
        }
    }
}

/// Incremental evaluation state: `gain[i]` is the objective change if bit
/// `i` flips, maintained in O(degree) per flip.
struct FlipState<'a> {
    tables: &'a Tables,
    bits: Vec<bool>,
    gain: Vec<i64>,
    value: i64,
}

impl<'a> FlipState<'a> {
    fn new(tables: &'a Tables, mask: u64) -> Self {
        let bits: Vec<bool> = (0..tables.size).map(|i| mask >> i & 1 == 1).collect();
        Self::from_bits(tables, bits)
    }

    fn from_bits(tables: &'a Tables, bits: Vec<bool>) -> Self {
        let mut value = 0i64;
        let mut gain = vec![0i64; tables.size];
        for i in 0..tables.size {
            let mut active_sum = tables.diag[i];
            for &(j, w) in &tables.neighbors[i] {
                if bits[j] {
                    active_sum += w;
                    if bits[i] && j > i {
                        value += w;
                    }
                }
            }
            if bits[i] {
                value += tables.diag[i];
            }
            gain[i] = if bits[i] { -active_sum } else { active_sum };
        }
        Self {
            tables,
            bits,
            gain,
            value,
        }
    }

    fn flip(&mut self, k: usize) {
        self.value += self.gain[k];
        self.bits[k] = !self.bits[k];
        self.gain[k] = -self.gain[k];
        let direction = if self.bits[k] { 1 } else { -1 };
        for &(j, w) in &self.tables.neighbors[k] {
            // gain[j] = (1 - 2 x_j) * s_j, and s_j moved by direction * w
            if self.bits[j] {
                self.gain[j] -= direction * w;
            } else {
                self.gain[j] += direction * w;
            }
        }
    }

}

/// Stopping rules for the heuristic: wall-clock limit, iteration budget, or
/// both (whichever hits first).
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub time: Option<Duration>,
    pub iterations: Option<u64>,
}

impl SearchLimits {
    pub fn time_limit(seconds: f64) -> Self {
        Self {
            time: Some(Duration::from_secs_f64(seconds)),
            iterations: None,
        }
    }

    pub fn iteration_budget(iterations: u64) -> Self {
        Self {
            time: None,
            iterations: Some(iterations),
        }
    }
}

const ELITE_POOL: usize = 8;
const TENURE_RANGE: std::ops::RangeInclusive<u64> = 10..=30;

/// Tabu-search maximization. Deterministic for a fixed seed when limited by
/// an iteration budget; stops early once `target` is reached.
pub fn tabu_search(
    model: &QuboModel,
    seed: u64,
    limits: SearchLimits,
    target: Option<i64>,
) -> SolveReport {
    assert!(
        limits.time.is_some() || limits.iterations.is_some(),
        "tabu search needs a stopping rule"
    );
    let started = Instant::now();
    let deterministic = limits.time.is_none();
    let tables = Tables::new(model);
    let size = tables.size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let finish = |best_bits: Vec<bool>, iterations: u64, started: Instant| -> SolveReport {
        let raw_value = model.evaluate(&best_bits);
        let penalty_clean = model.penalty_clean(&best_bits);
        SolveReport {
            best: Solution {
                bits: best_bits,
                raw_value,
                total_value: raw_value + model.offset(),
            },
            decoded_satisfied: None,
            penalty_clean,
            elapsed: if deterministic {
                0.0
            } else {
                started.elapsed().as_secs_f64()
            },
            seed,
            iterations,
        }
    };

    if size == 0 {
        return finish(Vec::new(), 0, started);
    }

    let initial: Vec<bool> = (0..size).map(|_| rng.random()).collect();
    let mut state = FlipState::from_bits(&tables, initial);
    let mut best_bits = state.bits.clone();
    let mut best_value = state.value;
    let mut elites: Vec<(i64, Vec<bool>)> = vec![(state.value, state.bits.clone())];

    let mut tabu_until = vec![0u64; size];
    let mut iteration = 0u64;
    let mut stagnant = 0u64;
    let restart_period = 1_000_000_000 * size as u64; // EXPERIMENT D

    let reached = |value: i64| target.is_some_and(|t| value + tables.offset >= t);
    if reached(best_value) {
        return finish(best_bits, 0, started);
    }

    loop {
        if let Some(budget) = limits.iterations {
            if iteration >= budget {
                break;
            }
        }
        if let Some(limit) = limits.time {
            if iteration.is_multiple_of(64) && started.elapsed() >= limit {
                break;
            }
        }
        iteration += 1;

        // best admissible flip: not tabu, or aspirates past the incumbent
        let mut chosen: Option<(usize, i64)> = None;
        let mut fallback: Option<(u64, usize)> = None;
        for (k, &until) in tabu_until.iter().enumerate() {
            let gain = state.gain[k];
            if until > iteration && state.value + gain <= best_value {
                let expiry = (until, k);
                if fallback.is_none_or(|f| expiry < f) {
                    fallback = Some(expiry);
                }
                continue;
            }
            if chosen.is_none_or(|(_, g)| gain > g) {
                chosen = Some((k, gain));
            }
        }
        let flip = match (chosen, fallback) {
            (Some((k, _)), _) => k,
            (None, Some((_, k))) => k,
            (None, None) => unreachable!("size > 0"),
        };
        state.flip(flip);
        tabu_until[flip] = iteration + rng.random_range(TENURE_RANGE);

        if state.value > best_value {
            best_value = state.value;
            best_bits = state.bits.clone();
            stagnant = 0;
            push_elite(&mut elites, state.value, &state.bits);
            if reached(best_value) {
                break;
            }
        } else {
            stagnant += 1;
        }

        if stagnant >= restart_period {
            push_elite(&mut elites, state.value, &state.bits);
            let relinked = if elites.len() >= 2 {
                let a = rng.random_range(0..elites.len());
                let mut b = rng.random_range(0..elites.len() - 1);
                if b >= a {
                    b += 1;
                }
                (hamming(&elites[a].1, &elites[b].1) >= 2)
                    .then(|| path_relink(&tables, &elites[a].1, &elites[b].1))
            } else {
                None
            };
            let restart_bits =
                relinked.unwrap_or_else(|| (0..size).map(|_| rng.random()).collect());
            state = FlipState::from_bits(&tables, restart_bits);
            if state.value > best_value {
                best_value = state.value;
                best_bits = state.bits.clone();
                push_elite(&mut elites, state.value, &state.bits);
                if reached(best_value) {
                    break;
                }
            }
            tabu_until.iter_mut().for_each(|t| *t = 0);
            stagnant = 0;
        }
    }
    finish(best_bits, iteration, started)
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Keep the pool sorted best-first and capped. A candidate too close to an
/// existing member replaces it only when strictly better; without the
/// distance guard the pool collapses onto one basin and relinking stops
/// diversifying.
fn push_elite(elites: &mut Vec<(i64, Vec<bool>)>, value: i64, bits: &[bool]) {
    let spacing = (bits.len() / 16).max(1);
    for i in 0..elites.len() {
        if hamming(&elites[i].1, bits) < spacing {
            if value > elites[i].0 {
                elites[i] = (value, bits.to_vec());
                elites.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            }
            return;
        }
    }
    elites.push((value, bits.to_vec()));
    elites.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    elites.truncate(ELITE_POOL);
}

/// Walk from `start` to `guide`, always taking the differing flip with the
/// largest gain, and return the best solution seen along the trajectory.
fn path_relink(tables: &Tables, start: &[bool], guide: &[bool]) -> Vec<bool> {
    let mut state = FlipState::from_bits(tables, start.to_vec());
    let mut remaining: Vec<usize> = (0..tables.size).filter(|&i| start[i] != guide[i]).collect();
    let mut best = (state.value, state.bits.clone());
    while !remaining.is_empty() {
        let mut pos = 0;
        for idx in 1..remaining.len() {
            let (cur, cand) = (remaining[pos], remaining[idx]);
            if (state.gain[cand], std::cmp::Reverse(cand))
                > (state.gain[cur], std::cmp::Reverse(cur))
            {
                pos = idx;
            }
        }
        let flip = remaining.swap_remove(pos);
        state.flip(flip);
        if state.value > best.0 {
            best = (state.value, state.bits.clone());
        }
    }
    best.1
}

/// Project a solution onto the original variables and recount satisfied
/// clauses. Auxiliary bits never influence the result.
pub fn decode(
    solution: &Solution,
    instance: &CnfInstance,
    model: &QuboModel,
) -> Result<usize, SolveError> {
    let mismatch = || SolveError::ProvenanceMismatch {
        instance: instance.source_name().to_string(),
    };
    let provenance = model.provenance().ok_or_else(mismatch)?;
    if provenance.source_name != instance.source_name()
        || provenance.num_vars != instance.num_vars()
        || provenance.num_clauses != instance.num_clauses()
    {
        return Err(mismatch());
    }
    let projected = &solution.bits[..instance.num_vars()];
    Ok(instance
        .count_satisfied(projected)
        .expect("projection has instance length"))
}
