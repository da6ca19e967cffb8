//! x1*x2 on the positive quadrant lies in the preordering at level 2 but not
//! in the quadratic module.

use poslab::poly::Polynomial;
use poslab::semialg::SemialgebraicSystem;
use poslab::sos::{membership, Membership, MembershipMode, MembershipProblem, SosOptions};

fn main() -> poslab::Result<()> {
    let s = SemialgebraicSystem::parse(2, &["x1", "x2"])?;
    let f = Polynomial::parse("x1*x2")?;
    for mode in [MembershipMode::QuadraticModule, MembershipMode::Preordering] {
        let p = MembershipProblem { target: f.clone(), system: s.clone(), level: 2, mode };
        match membership(&p, &SosOptions::default())? {
            Membership::Found(c) => {
                println!("{mode:?}: found");
                for e in &c.entries {
                    let rounded: Vec<String> = e.gram.iter().map(|v| format!("{:.4}", v + 0.0)).collect();
                    println!("  {:?}: gram [{}]", e.index, rounded.join(", "));
                }
            }
            Membership::NotFound(nf) => println!("{mode:?}: not found ({})", nf.reason),
        }
    }
    Ok(())
}
