//! Brute-force grid minimum over a semialgebraic set, with refinement.

use poslab::poly::Polynomial;
use poslab::semialg::{grid_min, GridSpec, SemialgebraicSystem};

fn main() -> poslab::Result<()> {
    // annulus 1/4 <= x1^2 + x2^2 <= 1
    let s = SemialgebraicSystem::parse(2, &["1 - x1^2 - x2^2", "x1^2 + x2^2 - 0.25"])?;
    let f = Polynomial::parse("x1^3 - x1*x2 + x2")?;
    for rounds in [0, 3] {
        let r = grid_min(&f, &s, &GridSpec::unit(2, 101, rounds))?;
        println!(
            "rounds {rounds}: min {:.6} at ({:.4}, {:.4}) over {} feasible points",
            r.minimum_value, r.argmin[0], r.argmin[1], r.feasible_count
        );
    }
    println!("contains (0, 0.75): {}", s.contains(&[0.0, 0.75], 0.0)?);
    println!("contains (0, 0.1):  {}", s.contains(&[0.0, 0.1], 0.0)?);
    Ok(())
}
