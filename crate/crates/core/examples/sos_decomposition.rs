//! Gram-matrix sum-of-squares decomposition and square extraction.

use poslab::poly::Polynomial;
use poslab::sos::{sos_decompose, Membership, SosOptions};

fn main() -> poslab::Result<()> {
    let opts = SosOptions::default();
    let f = Polynomial::parse("x1^4 + 2*x1^2*x2^2 + x2^4 - 2*x1*x2 + 1")?;
    match sos_decompose(&f, &opts)? {
        Membership::Found(c) => {
            println!("f = {f} is a sum of squares");
            println!("verification: {:?}", c.verify(&f, 1e-6));
            for (_, squares) in c.extract_squares(1e-8)? {
                for p in squares {
                    let p = p.prune(1e-9);
                    if !p.is_zero() {
                        println!("  ({p})^2");
                    }
                }
            }
        }
        Membership::NotFound(nf) => println!("not found: {}", nf.reason),
    }

    // the Motzkin polynomial is nonnegative but not a sum of squares
    let motzkin = Polynomial::parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1")?;
    match sos_decompose(&motzkin, &opts)? {
        Membership::Found(_) => println!("Motzkin: found (unexpected)"),
        Membership::NotFound(nf) => println!("Motzkin: not found ({})", nf.reason),
    }
    Ok(())
}
