#![allow(dead_code)]

use poslab::poly::{Monomial, Polynomial};
use poslab::semialg::SemialgebraicSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Box `[-1, 1]^n` as `1 - x_i^2 >= 0`.
pub fn unit_box(n: usize) -> SemialgebraicSystem {
    let gs: Vec<String> = (1..=n).map(|i| format!("1 - x{i}^2")).collect();
    let refs: Vec<&str> = gs.iter().map(String::as_str).collect();
    SemialgebraicSystem::parse(n, &refs).unwrap()
}

/// Random instance: `n` in {1, 2}, degree in 1..=4, box constraints.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Polynomial, SemialgebraicSystem) {
    let n = rng.random_range(1..=2usize);
    let d = rng.random_range(1..=4u32);
    let mut terms = Vec::new();
    for total in 0..=d {
        for a in 0..=total {
            let e = if n == 1 {
                if a != total {
                    continue;
                }
                vec![a]
            } else {
                vec![a, total - a]
            };
            if total == d || rng.random_bool(0.6) {
                terms.push((Monomial::new(e), rng.random_range(-2.0..2.0)));
            }
        }
    }
    let f = Polynomial::from_terms(n, terms).unwrap();
    (f, unit_box(n))
}

pub fn instances(seed: u64, count: usize) -> Vec<(Polynomial, SemialgebraicSystem)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}
