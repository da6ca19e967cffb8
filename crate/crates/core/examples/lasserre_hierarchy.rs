//! Lower bounds f_k* at increasing relaxation levels against the grid minimum.

use poslab::poly::Polynomial;
use poslab::semialg::{grid_min, GridSpec, SemialgebraicSystem};
use poslab::sos::{lasserre_bound, SosOptions};

fn main() -> poslab::Result<()> {
    let s = SemialgebraicSystem::parse(2, &["1 - x1^2", "1 - x2^2"])?;
    let f = Polynomial::parse("x1^4 - x1^2*x2 + x2^3 - 0.5*x1")?;
    let grid = grid_min(&f, &s, &GridSpec::default_for(2))?;
    println!("f = {f}");
    println!("grid f* = {:.8} at {:?}", grid.minimum_value, grid.argmin);
    for k in [4, 6, 8] {
        let r = lasserre_bound(&f, &s, k, &SosOptions::default())?;
        let v = r.verification.as_ref().map(|v| v.pass).unwrap_or(false);
        println!(
            "k = {k}: f_k* = {:.8}  gap {:.2e}  certificate verified: {v}",
            r.lower_bound,
            grid.minimum_value - r.lower_bound
        );
    }
    Ok(())
}
