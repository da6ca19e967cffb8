//! The lifting transform h = f - lambda sum (g_i - 1)^{2k} g_i and the
//! smallest k that keeps h above f*/2 on the box.

use poslab::bounds::{find_lifting_k, lifting_parameters, lifting_transform};
use poslab::poly::Polynomial;
use poslab::semialg::{GridSpec, SemialgebraicSystem};

fn main() -> poslab::Result<()> {
    let s = SemialgebraicSystem::parse(1, &["1 - x1^2"])?;
    let f = Polynomial::parse("x1 + 2")?;
    println!("h(lambda = 1, k = 1) = {}", lifting_transform(&f, &s, 1.0, 1)?);

    let grid = GridSpec::unit(1, 2001, 0);
    for lambda in [0.1, 1.0, 10.0, 100.0, 1e6] {
        let r = find_lifting_k(&f, &s, lambda, &grid, 200)?;
        match r.k {
            Some(k) => println!("lambda = {lambda:>9}: k = {k}, min h = {:.4}", r.min_h.last().unwrap()),
            None => println!("lambda = {lambda:>9}: no k <= 200"),
        }
    }

    let lp = lifting_parameters(&f, &s, 1.0, 1.0, 1.0, &grid)?;
    println!(
        "\nwith c0 = c1 = c2 = 1: L = {}, lambda = {}, k = {}, grid min h = {:.4} (f*/2 = {})",
        lp.l,
        lp.lambda,
        lp.k,
        lp.empirical_min_h,
        lp.f_star / 2.0
    );
    Ok(())
}
