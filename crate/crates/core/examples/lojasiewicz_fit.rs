//! Fitting dist(x, S)^c2 <= c3 * (-min g_i(x)) on random samples.

use poslab::bounds::lojasiewicz_estimate;
use poslab::semialg::{GridSpec, SemialgebraicSystem};

fn main() -> poslab::Result<()> {
    let cases: [(&str, usize, &[&str]); 4] = [
        ("x >= 0", 1, &["x1"]),
        ("x^3 >= 0", 1, &["x1^3"]),
        ("x^2 <= 1 on [-2, 2]", 1, &["1 - x1^2"]),
        ("disc in the plane", 2, &["0.5 - x1^2 - x2^2"]),
    ];
    for (name, n, gs) in cases {
        let s = SemialgebraicSystem::parse(n, gs)?;
        let grid = if name.contains("[-2, 2]") {
            GridSpec::unit(1, 401, 0).with_box(vec![(-2.0, 2.0)])
        } else {
            GridSpec::unit(n, 101, 0)
        };
        let fit = lojasiewicz_estimate(&s, &grid, 2000, 42)?;
        println!(
            "{name:<22} c2 = {:.4}  c3 = {:.4}  ({} samples, dist error <= {:.3})",
            fit.c2_exponent, fit.c3_scale, fit.sample_count, fit.dist_error_bound
        );
    }
    Ok(())
}
