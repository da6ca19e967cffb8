//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::io::Write;
use std::time::Instant;

use poslab::bounds::{
    find_lifting_k, gap_bound, lifting_transform, lojasiewicz_estimate, putinar_degree_bound,
    round_hypercube_degree, BoundInputs, GapBound,
};
use poslab::certificate::Certificate;
use poslab::poly::{product_norm_bound, Monomial, Polynomial};
use poslab::semialg::{archimedean_witness, grid_min, GridSpec, SemialgebraicSystem};
use poslab::sos::{
    lasserre_bound, module_membership, BoundKind, Membership, MembershipMode, MembershipProblem,
    SosOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<(String, Value), String>;

fn p(s: &str, n: usize) -> Polynomial {
    Polynomial::parse_with_dimension(s, n).unwrap()
}

fn sys(n: usize, gs: &[&str]) -> SemialgebraicSystem {
    SemialgebraicSystem::parse(n, gs).unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_small_hierarchy() -> Outcome {
    let opts = SosOptions::default();
    let mut out = Vec::new();
    for (f, gs, n, expected) in [
        ("x1", vec!["1 - x1^2"], 1, -1.0),
        ("x1 + x2 + 2", vec!["1 - x1^2", "1 - x2^2"], 2, 0.0),
    ] {
        let t = Instant::now();
        let r = lasserre_bound(&p(f, n), &sys(n, &gs), 2, &opts).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        check((r.lower_bound - expected).abs() <= 1e-5, || {
            format!("{f}: f_2* = {} (expected {expected})", r.lower_bound)
        })?;
        check(secs < 5.0, || format!("{f}: took {secs:.2}s"))?;
        out.push(json!({ "f": f, "f2": r.lower_bound }));
    }
    Ok((
        format!(
            "f_2* = {:.3e} and {:.3e}",
            out[0]["f2"].as_f64().unwrap(),
            out[1]["f2"].as_f64().unwrap()
        ),
        Value::Array(out),
    ))
}

fn certificate_round_trip() -> Outcome {
    let opts = SosOptions::default();
    let mut certs: Vec<(String, Certificate, Polynomial)> = Vec::new();
    let members = [
        ("2 + x1", vec!["1 - x1^2"], 1, 2),
        ("x1 + 1", vec!["1 - x1^2"], 1, 2),
        ("x1 + x2 + 2", vec!["1 - x1^2", "1 - x2^2"], 2, 2),
        ("1 - x1^2 - x2^2", vec!["1 - x1^2 - x2^2"], 2, 2),
        ("x1^4 - x1^2 + 1", vec!["1 - x1^2"], 1, 4),
    ];
    for (f, gs, n, k) in members {
        let target = p(f, n);
        let mp = MembershipProblem {
            target: target.clone(),
            system: sys(n, &gs),
            level: k,
            mode: MembershipMode::QuadraticModule,
        };
        match module_membership(&mp, &opts).map_err(|e| e.to_string())? {
            Membership::Found(c) => certs.push((f.to_string(), c, target)),
            Membership::NotFound(nf) => return Err(format!("{f}: not found ({})", nf.reason)),
        }
    }
    let optimizations = [
        ("x1", vec!["1 - x1^2"], 1, 2),
        ("x1 + x2 + 2", vec!["1 - x1^2", "1 - x2^2"], 2, 2),
        ("x1^3 - x1", vec!["1 - x1^2"], 1, 4),
        ("x1*x2", vec!["1 - x1^2 - x2^2"], 2, 2),
    ];
    for (f, gs, n, k) in optimizations {
        let r = lasserre_bound(&p(f, n), &sys(n, &gs), k, &opts).map_err(|e| e.to_string())?;
        let c = r.certificate.ok_or_else(|| format!("{f}: no certificate"))?;
        let target = c.target.clone().unwrap();
        certs.push((format!("{f} - f_{k}*"), c, target));
    }
    let mut worst_res: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    let mut reports = Vec::new();
    for (name, c, target) in &certs {
        let back = Certificate::from_json(&c.to_json().map_err(|e| e.to_string())?)
            .map_err(|e| format!("{name}: {e}"))?;
        check(&back == c, || format!("{name}: JSON round trip changed the certificate"))?;
        let r = back.verify(target, 1e-6);
        check(r.pass && r.residual_norm <= 1e-6 && r.min_gram_eigenvalue >= -1e-8, || {
            format!("{name}: {r:?}")
        })?;
        worst_res = worst_res.max(r.residual_norm);
        worst_eig = worst_eig.min(r.min_gram_eigenvalue);
        reports.push(json!({ "name": name, "residual": r.residual_norm, "min_eig": r.min_gram_eigenvalue }));
    }
    Ok((
        format!(
            "{} certificates, max residual {worst_res:.1e}, min eigenvalue {worst_eig:.1e}",
            certs.len()
        ),
        Value::Array(reports),
    ))
}

fn hierarchy_monotone_and_sound() -> Outcome {
    let opts = SosOptions::default();
    let mut rows = Vec::new();
    let mut worst_dip: f64 = 0.0;
    for (i, (f, s)) in common::instances(2024, 20).into_iter().enumerate() {
        let d_even = (f.degree() + f.degree() % 2).max(2);
        let grid = grid_min(&f, &s, &GridSpec::default_for(s.dimension()))
            .map_err(|e| e.to_string())?
            .minimum_value;
        let mut values = Vec::new();
        for k in [d_even, d_even + 2, d_even + 4] {
            let r = lasserre_bound(&f, &s, k, &opts).map_err(|e| format!("instance {i} ({f}) k={k}: {e}"))?;
            check(r.kind == BoundKind::Finite, || format!("instance {i} ({f}) k={k}: {:?}", r.kind))?;
            check(r.lower_bound <= grid + 1e-4, || {
                format!("instance {i} ({f}) k={k}: f_k* = {} above grid f* = {grid}", r.lower_bound)
            })?;
            if let Some(&prev) = values.last() {
                let dip: f64 = prev - r.lower_bound;
                worst_dip = worst_dip.max(dip);
                check(dip <= 1e-6, || {
                    format!("instance {i} ({f}): f_k* fell from {prev} to {} at k={k}", r.lower_bound)
                })?;
            }
            values.push(r.lower_bound);
        }
        rows.push(json!({ "f": f.to_string(), "grid": grid, "levels": values }));
    }
    Ok((
        format!("20 instances x 3 levels, largest decrease {worst_dip:.1e}"),
        Value::Array(rows),
    ))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: u32, homogeneous_deg: Option<u32>) -> Polynomial {
    loop {
        let terms: Vec<(Monomial, f64)> = (0..rng.random_range(1..=6))
            .map(|_| {
                let deg = homogeneous_deg.unwrap_or_else(|| rng.random_range(0..=max_deg));
                let mut e = vec![0u32; n];
                for _ in 0..deg {
                    e[rng.random_range(0..n)] += 1;
                }
                (Monomial::new(e), rng.random_range(-10.0..10.0))
            })
            .collect();
        let f = Polynomial::from_terms(n, terms).unwrap();
        if !f.is_zero() {
            return f;
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn norm_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = 1000;
    let mut violations = [0usize; 5];
    for _ in 0..cases {
        let n = rng.random_range(1..=3);
        // homogeneous submultiplicativity
        let (a, b) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let hp = random_poly(&mut rng, n, 0, Some(a));
        let hq = random_poly(&mut rng, n, 0, Some(b));
        let prod = hp.mul(&hq).unwrap().weighted_norm();
        if prod > hp.weighted_norm() * hq.weighted_norm() * (1.0 + 1e-12) {
            violations[0] += 1;
        }
        // general product bound
        let s = rng.random_range(1..=3);
        let ps: Vec<Polynomial> = (0..s).map(|_| random_poly(&mut rng, n, 3, None)).collect();
        let mut prod = Polynomial::constant(n, 1.0);
        for q in &ps {
            prod = prod.mul(q).unwrap();
        }
        if prod.weighted_norm() > product_norm_bound(&ps).unwrap() * (1.0 + 1e-12) {
            violations[1] += 1;
        }
        // sup bound
        let f = loop {
            let f = random_poly(&mut rng, n, 4, None);
            if f.degree() >= 1 {
                break f;
            }
        };
        let bound = f.sup_bound().unwrap();
        for _ in 0..10 {
            let x = random_point(&mut rng, n);
            if f.evaluate(&x).unwrap().abs() > bound {
                violations[2] += 1;
            }
        }
        // Lipschitz bound
        let (x, y) = (random_point(&mut rng, n), random_point(&mut rng, n));
        let dist = x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let diff = (f.evaluate(&x).unwrap() - f.evaluate(&y).unwrap()).abs();
        if diff > dist * f.lipschitz_bound().unwrap() + 1e-9 {
            violations[3] += 1;
        }
        // (y - 1)^{2k} y <= 1 / (2k + 1)
        let k = rng.random_range(0..=50);
        let yv: f64 = rng.random_range(0.0..=1.0);
        if (yv - 1.0).powi(2 * k) * yv > 1.0 / (2 * k + 1) as f64 + 1e-12 {
            violations[4] += 1;
        }
    }
    let total: usize = violations.iter().sum();
    check(total == 0, || format!("violations {violations:?}"))?;
    Ok((
        format!("{cases} cases each: submultiplicativity, product bound, sup, Lipschitz, calculus; 0 violations"),
        json!({ "cases": cases, "violations": violations }),
    ))
}

fn gap_arithmetic() -> Outcome {
    let b = BoundInputs::new(1.0, 1, 1, 1.0, 1.0);
    let g8 = gap_bound(&b.with_k(8)).map_err(|e| e.to_string())?;
    let v = g8.value().ok_or("k = 8 reported not applicable")?;
    check((v - 2.8854).abs() <= 1e-4, || format!("gap(k=8) = {v}"))?;
    let g7 = gap_bound(&b.with_k(7)).map_err(|e| e.to_string())?;
    check(matches!(g7, GapBound::NotApplicable { .. }), || format!("k = 7 gave {g7:?}"))?;
    let pb = putinar_degree_bound(&b).map_err(|e| e.to_string())?;
    check((pb.value - std::f64::consts::E).abs() <= 1e-6, || format!("putinar = {}", pb.value))?;
    Ok((
        format!("gap(k=8) = {v:.4}, k=7 not applicable, putinar = {:.6}", pb.value),
        json!({ "gap8": v, "putinar": pb.value }),
    ))
}

fn lifting_empirics() -> Outcome {
    let f = p("x1 + 2", 1);
    let s = sys(1, &["1 - x1^2"]);
    let grid = GridSpec::unit(1, 10_000, 0);
    let r = find_lifting_k(&f, &s, 0.1, &grid, 10).map_err(|e| e.to_string())?;
    check(r.k == Some(1), || format!("lambda = 0.1 gave k = {:?}", r.k))?;
    let h = lifting_transform(&f, &s, 0.1, 1).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    let mut feasible = 0;
    for x in grid.feasible_points(&s, 0.0) {
        feasible += 1;
        worst = worst.max(h.evaluate(&x).unwrap() - f.evaluate(&x).unwrap());
    }
    check(worst <= 1e-9, || format!("h exceeds f by {worst}"))?;
    let big = find_lifting_k(&f, &s, 1e6, &grid, 3).map_err(|e| e.to_string())?;
    check(big.k.is_none(), || format!("lambda = 1e6 gave k = {:?}", big.k))?;
    Ok((
        format!("k = 1 for lambda = 0.1, h <= f on {feasible} grid points, lambda = 1e6 not found up to 3"),
        json!({ "k": r.k, "min_h": r.min_h, "big_min_h": big.min_h, "max_h_minus_f": worst }),
    ))
}

fn lojasiewicz() -> Outcome {
    let grid = GridSpec::unit(1, 101, 0);
    let cubic = lojasiewicz_estimate(&sys(1, &["x1^3"]), &grid, 1000, 42).map_err(|e| e.to_string())?;
    let linear = lojasiewicz_estimate(&sys(1, &["x1"]), &grid, 1000, 42).map_err(|e| e.to_string())?;
    check((2.9..=3.1).contains(&cubic.c2_exponent), || format!("cubic c2 = {}", cubic.c2_exponent))?;
    check((0.95..=1.05).contains(&linear.c2_exponent), || format!("linear c2 = {}", linear.c2_exponent))?;
    check(cubic.max_violation == 0.0 && linear.max_violation == 0.0, || {
        format!("violations {} / {}", cubic.max_violation, linear.max_violation)
    })?;
    Ok((
        format!(
            "c2 = {:.4} for x^3, {:.4} for x, zero violation",
            cubic.c2_exponent, linear.c2_exponent
        ),
        json!({ "cubic": cubic, "linear": linear }),
    ))
}

fn rounded_hypercube() -> Outcome {
    let grid = GridSpec::unit(1, 101, 0);
    let point = round_hypercube_degree(&sys(1, &["x1", "-x1"]), &grid, 20).map_err(|e| e.to_string())?;
    let half = round_hypercube_degree(&sys(1, &["0.25 - x1^2"]), &grid, 20).map_err(|e| e.to_string())?;
    let d_point = point.as_ref().map(|(d, _)| *d);
    let d_half = half.as_ref().map(|(d, _)| *d);
    check(d_point == Some(2), || format!("S = {{0}} gave {d_point:?}"))?;
    check(d_half == Some(2), || format!("S = [-1/2, 1/2] gave {d_half:?}"))?;
    Ok((
        "d = 2 for {0} and for [-1/2, 1/2]".into(),
        json!({ "point": d_point, "half": d_half, "p2": point.unwrap().1.to_string() }),
    ))
}

fn archimedean() -> Outcome {
    let opts = SosOptions::default();
    let disc = sys(2, &["1 - x1^2 - x2^2"]);
    let c = archimedean_witness(&disc, 1.0, 2, &opts)
        .map_err(|e| e.to_string())?
        .ok_or("no witness for the disc at k = 2")?;
    let report = c.verify(&p("1 - x1^2 - x2^2", 2), 1e-6);
    check(report.pass, || format!("disc witness fails verification: {report:?}"))?;
    let half_line = sys(1, &["x1"]);
    let mut inconclusive = Vec::new();
    for k in [2, 4, 6, 8] {
        let mp = MembershipProblem {
            target: p("1 - x1^2", 1),
            system: half_line.clone(),
            level: k,
            mode: MembershipMode::QuadraticModule,
        };
        match module_membership(&mp, &opts).map_err(|e| e.to_string())? {
            Membership::Found(_) => return Err(format!("witness reported for (x) at k = {k}")),
            Membership::NotFound(nf) => inconclusive.push(json!({ "k": nf.level, "reason": nf.reason })),
        }
        let w = archimedean_witness(&half_line, 1.0, k, &opts).map_err(|e| e.to_string())?;
        check(w.is_none(), || format!("archimedean_witness found one for (x) at k = {k}"))?;
    }
    Ok((
        "disc witness verified at k = 2; (x) inconclusive for k = 2..8".into(),
        json!({ "disc": c.to_json_value().map_err(|e| e.to_string())?, "half_line": inconclusive }),
    ))
}

/// Outputs of the CLI for the workflows above.
fn cli_outputs() -> Vec<String> {
    let dir = common::fixture("");
    let f = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let runs: Vec<Vec<String>> = vec![
        vec!["solve".into(), "--input".into(), f("interval_x.json"), "--level".into(), "2".into()],
        vec!["solve".into(), "--input".into(), f("box_sum.json")],
        vec!["converge".into(), "--input".into(), f("interval_x.json"), "--levels".into(), "2,4,6".into(), "--format".into(), "csv".into()],
        vec!["certify".into(), "--input".into(), f("disc.json"), "--archimedean".into(), "1".into()],
        vec!["lift".into(), "--input".into(), f("lift_shift.json"), "--lambda".into(), "0.1".into(), "--grid".into(), "10000".into()],
        vec!["estimate".into(), "--input".into(), f("cubic.json")],
        vec!["bounds".into(), "--input".into(), f("lift_shift.json"), "--level".into(), "8".into()],
    ];
    runs.into_iter()
        .map(|args| {
            let mut out = Vec::new();
            let mut full = vec!["poslab".to_string()];
            full.extend(args);
            let code = poslab::cli::run(full, &mut out, &mut Vec::new());
            format!("exit {code}\n{}", String::from_utf8(out).unwrap())
        })
        .collect()
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("exact small hierarchy", exact_small_hierarchy),
    ("certificate round-trip", certificate_round_trip),
    ("hierarchy monotonicity and soundness", hierarchy_monotone_and_sound),
    ("norm and analysis property suite", norm_suite),
    ("gap-bound arithmetic", gap_arithmetic),
    ("lifting lemma empirics", lifting_empirics),
    ("lojasiewicz estimation", lojasiewicz),
    ("rounded hypercube", rounded_hypercube),
    ("archimedean witness", archimedean),
];

fn run_all() -> Vec<Result<(String, String), String>> {
    CRITERIA
        .iter()
        .map(|(_, f)| f().map(|(msg, v)| (msg, serde_json::to_string(&v).unwrap())))
        .collect()
}

fn main() {
    let mut stdout = std::io::stdout();
    let mut failures = 0;
    let first = run_all();
    for (i, ((name, _), r)) in CRITERIA.iter().zip(&first).enumerate() {
        let line = match r {
            Ok((msg, _)) => format!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failures += 1;
                format!("criterion {:>2} FAIL  {name}: {msg}", i + 1)
            }
        };
        writeln!(stdout, "{line}").unwrap();
    }

    let second = run_all();
    let (cli_a, cli_b) = (cli_outputs(), cli_outputs());
    let same_lib = first == second;
    let same_cli = cli_a == cli_b;
    let line = if same_lib && same_cli {
        format!(
            "criterion 10 PASS  determinism: criteria 1-9 and {} CLI outputs byte-identical across runs",
            cli_a.len()
        )
    } else {
        failures += 1;
        format!("criterion 10 FAIL  determinism: library outputs equal = {same_lib}, CLI outputs equal = {same_cli}")
    };
    writeln!(stdout, "{line}").unwrap();
    writeln!(stdout, "acceptance: {} of 10 criteria passed", 10 - failures).unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
