//! Closed-form degree and gap bounds for a range of inputs.

use poslab::bounds::{gap_bound, putinar_degree_bound, schmuedgen_degree_bound, BoundInputs, GapBound};

fn main() -> poslab::Result<()> {
    println!("{:>3} {:>3} {:>10} {:>14} {:>14}", "d", "n", "f*", "schmuedgen", "putinar");
    for d in 1..=3 {
        for n in 1..=2 {
            for f_star in [1.0, 0.1] {
                let b = BoundInputs::new(1.0, d, n, 1.0, f_star);
                let pb = putinar_degree_bound(&b)?;
                let put = if pb.saturated { "saturated".to_string() } else { format!("{:.4e}", pb.value) };
                println!("{d:>3} {n:>3} {f_star:>10} {:>14.4e} {put:>14}", schmuedgen_degree_bound(&b)?);
            }
        }
    }
    println!();
    let b = BoundInputs::new(1.0, 1, 1, 1.0, 1.0);
    for k in [7u64, 8, 100, 10_000, 1_000_000] {
        match gap_bound(&b.with_k(k))? {
            GapBound::Valid { value } => println!("k = {k:>8}: f* - f_k* <= {value:.4}"),
            GapBound::NotApplicable { threshold } => println!("k = {k:>8}: not applicable (needs k > {threshold:.4})"),
        }
    }
    Ok(())
}
