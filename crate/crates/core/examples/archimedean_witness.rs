//! Searching for N - |x|^2 in the quadratic module.

use poslab::semialg::{archimedean_witness, SemialgebraicSystem};
use poslab::sos::SosOptions;

fn main() -> poslab::Result<()> {
    let opts = SosOptions::default();
    let cases: [(&str, usize, &[&str], f64); 4] = [
        ("unit disc", 2, &["1 - x1^2 - x2^2"], 1.0),
        ("box", 2, &["1 - x1^2", "1 - x2^2"], 2.0),
        ("interval via x(1 - x)", 1, &["x1 - x1^2"], 1.0),
        ("half line", 1, &["x1"], 1.0),
    ];
    for (name, n, gs, big_n) in cases {
        let s = SemialgebraicSystem::parse(n, gs)?;
        let found = (2..=6).step_by(2).find_map(|k| {
            archimedean_witness(&s, big_n, k, &opts).ok().flatten().map(|c| (k, c))
        });
        match found {
            Some((k, c)) => println!("{name:<24} N = {big_n}: witness at k = {k}, {} Gram blocks", c.entries.len()),
            None => println!("{name:<24} N = {big_n}: nothing up to k = 6 (inconclusive)"),
        }
    }
    Ok(())
}
