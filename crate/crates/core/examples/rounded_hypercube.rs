//! Smallest d with 1 - 1/d - sum x_i^{2d} > 0 on a set inside the open cube.

use poslab::bounds::round_hypercube_degree;
use poslab::semialg::{GridSpec, SemialgebraicSystem};

fn main() -> poslab::Result<()> {
    let grid = GridSpec::unit(2, 201, 0);
    for r in [0.5, 0.9, 0.99] {
        let g = format!("{} - x1^2 - x2^2", r * r);
        let s = SemialgebraicSystem::parse(2, &[g.as_str()])?;
        match round_hypercube_degree(&s, &grid, 500)? {
            Some((d, p)) if d <= 3 => println!("disc of radius {r}: d = {d}, p_d = {p}"),
            Some((d, _)) => println!("disc of radius {r}: d = {d}"),
            None => println!("disc of radius {r}: no d <= 500"),
        }
    }
    Ok(())
}
