//! Certificates written as JSON, read back and re-verified; a perturbed
//! Gram matrix fails.

use poslab::certificate::Certificate;
use poslab::poly::Polynomial;
use poslab::semialg::SemialgebraicSystem;
use poslab::sos::{module_membership, Membership, MembershipMode, MembershipProblem, SosOptions};

fn main() -> poslab::Result<()> {
    let s = SemialgebraicSystem::parse(1, &["1 - x1^2"])?;
    let f = Polynomial::parse("2 + x1")?;
    let p = MembershipProblem { target: f.clone(), system: s, level: 2, mode: MembershipMode::QuadraticModule };
    let Membership::Found(c) = module_membership(&p, &SosOptions::default())? else {
        println!("no certificate");
        return Ok(());
    };
    let text = c.to_json()?;
    println!("{text}");
    let back = Certificate::from_json(&text)?;
    println!("identical after round trip: {}", back == c);
    println!("reconstructed: {}", back.reconstruct()?);
    println!("verify: {:?}", back.verify(&f, 1e-6));

    let mut bad = back;
    bad.entries[0].gram[(0, 0)] += 0.1;
    println!("perturbed: {:?}", bad.verify(&f, 1e-6));
    Ok(())
}
