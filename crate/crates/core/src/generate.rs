//! Seeded uniform random 3-SAT generation for hermetic benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cnf::{Clause, CnfInstance, Literal};

/// Uniform random 3-SAT: each clause picks three distinct variables
/// uniformly and negates each literal with probability 1/2. Deterministic
/// for a fixed seed.
pub fn random_3sat(num_vars: usize, num_clauses: usize, seed: u64) -> CnfInstance {
    assert!(num_vars >= 3, "three distinct variables per clause");
    assert!(num_clauses >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses: Vec<Clause> = (0..num_clauses)
        .map(|_| {
            let mut vars = [0usize; 3];
            loop {
                for v in &mut vars {
                    *v = rng.random_range(1..=num_vars);
                }
                if vars[0] != vars[1] && vars[0] != vars[2] && vars[1] != vars[2] {
                    break;
                }
            }
            let literals = vars
                .iter()
                .map(|&v| Literal::new(v, rng.random()))
                .collect();
            Clause::new(literals).expect("distinct variables")
        })
        .collect();
    CnfInstance::new(
        num_vars,
        clauses,
        format!("rand3sat-n{num_vars}-m{num_clauses}-s{seed}"),
    )
    .expect("at least one clause")
}
