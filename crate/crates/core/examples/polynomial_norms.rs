//! Weighted coefficient norm and the analytic bounds derived from it.

use poslab::poly::{product_norm_bound, Polynomial};

fn main() -> poslab::Result<()> {
    let f = Polynomial::parse("3*x1^2*x2 - x1*x2 + 2*x2^3 + 0.5")?;
    println!("f              = {f}");
    println!("deg f          = {}", f.degree());
    println!("||f||          = {}", f.weighted_norm());
    println!("sup bound      = {}", f.sup_bound()?);
    println!("Lipschitz      = {}", f.lipschitz_bound()?);

    let p = Polynomial::parse_with_dimension("x1 + x2", 2)?;
    let q = Polynomial::parse_with_dimension("x1 - x2", 2)?;
    let pq = p.mul(&q)?;
    println!("\n(x1 + x2)(x1 - x2) = {pq}");
    println!("||pq|| = {}  <=  ||p|| ||q|| = {}", pq.weighted_norm(), p.weighted_norm() * q.weighted_norm());

    let r = Polynomial::parse_with_dimension("x1 + 1", 2)?;
    let prod = p.mul(&r)?;
    println!(
        "||(x1 + x2)(x1 + 1)|| = {}  <=  product bound {}",
        prod.weighted_norm(),
        product_norm_bound(&[p, r])?
    );
    Ok(())
}
