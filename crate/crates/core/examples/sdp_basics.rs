//! The block SDP solver on two tiny problems.

use poslab::sdp::{solve, SdpOptions, SdpProblem, SymEntry};

fn main() -> poslab::Result<()> {
    // minimize X00 + X11 subject to X01 = 1, X PSD: optimum 2 at [[1,1],[1,1]].
    // An off-diagonal entry covers both (0,1) and (1,0), so the row reads X01 + X10 = 2.
    let mut p = SdpProblem::new(vec![2]);
    p.add_constraint(vec![SymEntry::new(0, 0, 1, 1.0)], 2.0);
    p.objective = vec![SymEntry::new(0, 0, 0, 1.0), SymEntry::new(0, 1, 1, 1.0)];
    let sol = solve(&p, &SdpOptions::default())?;
    println!("{}", p.to_debug_text());
    println!("status {:?}, objective {:.9}, iterations {}", sol.status, sol.objective_value, sol.iterations);
    println!("X = {}", sol.block_values[0]);

    // X00 = -1 has no PSD solution
    let mut q = SdpProblem::new(vec![1]);
    q.add_constraint(vec![SymEntry::new(0, 0, 0, 1.0)], -1.0);
    let sol = solve(&q, &SdpOptions::default())?;
    println!("X00 = -1: status {:?}", sol.status);
    Ok(())
}
