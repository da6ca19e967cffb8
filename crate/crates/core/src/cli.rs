//! `poslab` command line.
//!
//! Problem files are JSON:
//!
//! ```text
//! {
//!   "n": 1,
//!   "objective": "x1",
//!   "constraints": ["1 - x1^2"],
//!   "box": [[-1, 1]],
//!   "options": { "level": 2 }
//! }
//! ```
//!
//! `box` only bounds the grid oracle; it is not added as a constraint.
//! `options` may set defaults for flags; flags win.
//!
//! Exit codes: 0 success, 1 input error, 2 inconclusive, 3 verification
//! failure, 4 solver failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{
    bounds_report, find_lifting_k, gap_bound, lifting_parameters, lojasiewicz_estimate,
    round_hypercube_degree, BoundInputs, DEFAULT_SEED,
};
use crate::certificate::{Certificate, DEFAULT_PSD_TOL};
use crate::error::Error;
use crate::poly::Polynomial;
use crate::semialg::{archimedean_witness, grid_min, GridSpec, SemialgebraicSystem};
use crate::sos::{self, lasserre_bound, BoundKind, Membership, MembershipMode, MembershipProblem, SosOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Overrides the SDP size cap (sum of Gram block sizes).
pub const MAX_SDP_DIM_ENV: &str = "POSLAB_MAX_SDP_DIM";

#[derive(Parser, Debug)]
#[command(name = "poslab", version, about = "Sums-of-squares relaxations and certificates for polynomial optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lower bound f_k* at one relaxation level, with its certificate.
    Solve(SolveArgs),
    /// Search for a membership certificate of the objective.
    Certify(CertifyArgs),
    /// Check a certificate against a problem.
    Verify(VerifyArgs),
    /// Evaluate the closed-form degree and gap bounds.
    Bounds(BoundsArgs),
    /// Lifting-transform parameters and an empirical search for k.
    Lift(LiftArgs),
    /// f_k* over a range of levels next to the grid minimum.
    Converge(ConvergeArgs),
    /// Lojasiewicz exponent fit and rounded-hypercube degree.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Grid for the brute-force oracle: "P" points per axis or "P:R" with R refinement rounds.
    #[arg(long)]
    pub grid: Option<String>,
    /// Residual tolerance for certificate verification.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    QuadraticModule,
    Preordering,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Relaxation level k.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Certify N - |x|^2 instead of the objective (archimedean witness).
    #[arg(long, value_name = "N")]
    pub archimedean: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// The problem's objective.
    Objective,
    /// The target recorded in the certificate.
    Certificate,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Certificate JSON, bare or as written by `solve`/`certify`.
    #[arg(long)]
    pub certificate: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetArg::Objective)]
    pub target: TargetArg,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Constant c of the bound theorems.
    #[arg(long)]
    pub c: Option<f64>,
    /// Level k for the gap bound.
    #[arg(long)]
    pub level: Option<u64>,
    /// f* to use instead of the grid minimum.
    #[arg(long)]
    pub f_star: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Also search for the smallest k working for this lambda.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub k_max: u32,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Levels: "2,4,6" or "start:end[:step]".
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also search for the rounded-hypercube degree up to this d.
    #[arg(long)]
    pub d_max: Option<u32>,
}

/// Problem file contents.
#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub objective: String,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default, rename = "box")]
    pub bounding_box: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub options: ProblemOptions,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    pub level: Option<u32>,
    pub levels: Option<Vec<u32>>,
    pub mode: Option<ModeArg>,
    pub grid: Option<String>,
    pub tol: Option<f64>,
    pub c: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

/// Parsed problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Polynomial,
    pub system: SemialgebraicSystem,
    pub bounding_box: Vec<(f64, f64)>,
    pub options: ProblemOptions,
}

impl Problem {
    pub fn from_json(text: &str) -> crate::Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn from_file(file: ProblemFile) -> crate::Result<Self> {
        let n = file.n;
        if n == 0 {
            return Err(Error::Schema("n must be at least 1".into()));
        }
        let objective = Polynomial::parse_with_dimension(&file.objective, n)?;
        let gs = file
            .constraints
            .iter()
            .map(|s| Polynomial::parse_with_dimension(s, n))
            .collect::<crate::Result<Vec<_>>>()?;
        let system = SemialgebraicSystem::new(n, gs)?;
        let bounding_box = match file.bounding_box {
            None => vec![(-1.0, 1.0); n],
            Some(b) => {
                if b.len() != n {
                    return Err(Error::Schema(format!("box has {} axes, n = {n}", b.len())));
                }
                b.into_iter().map(|[lo, hi]| (lo, hi)).collect()
            }
        };
        Ok(Self {
            objective,
            system,
            bounding_box,
            options: file.options,
        })
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn default_level(&self) -> u32 {
        let d = self.objective.degree().max(1);
        d + d % 2
    }
}

/// `"P"` or `"P:R"`.
pub fn parse_grid(spec: &str, bounds: Vec<(f64, f64)>) -> crate::Result<GridSpec> {
    let bad = || Error::Argument(format!("grid must be \"P\" or \"P:R\", got {spec:?}"));
    let mut parts = spec.split(':');
    let points: usize = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let rounds: usize = match parts.next() {
        None => 0,
        Some(r) => r.trim().parse().map_err(|_| bad())?,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    let n = bounds.len();
    let grid = GridSpec::unit(n, points, rounds).with_box(bounds);
    grid.validate(n)?;
    Ok(grid)
}

/// `"2,4,6"` or `"start:end[:step]"` (inclusive, default step 2).
pub fn parse_levels(spec: &str) -> crate::Result<Vec<u32>> {
    let bad = || Error::Argument(format!("levels must be \"a,b,c\" or \"start:end[:step]\", got {spec:?}"));
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<u32> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<crate::Result<_>>()?;
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 2),
            [a, b, s] => (*a, *b, *s),
            _ => return Err(bad()),
        };
        if step == 0 {
            return Err(bad());
        }
        Ok((start..=end).step_by(step as usize).collect())
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } => EXIT_SOLVER,
        Error::InfeasibleAtResolution { .. } | Error::DegenerateFit(_) => EXIT_INCONCLUSIVE,
        Error::Rounding { .. } => EXIT_VERIFICATION,
        Error::Argument(_)
        | Error::DimensionMismatch { .. }
        | Error::Capacity(_)
        | Error::Parse { .. }
        | Error::Schema(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_INPUT,
    }
}

/// Outcome of one subcommand: text to emit and an exit code.
struct Outcome {
    body: String,
    code: i32,
}

impl Outcome {
    fn json(v: &Value, code: i32) -> crate::Result<Self> {
        let mut body = serde_json::to_string_pretty(v)?;
        body.push('\n');
        Ok(Self { body, code })
    }
}

fn sos_options(tol: Option<f64>) -> crate::Result<SosOptions> {
    let mut opts = SosOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Argument(format!("--tol must be positive, got {t}")));
        }
        opts.residual_tol = t;
    }
    if let Ok(v) = std::env::var(MAX_SDP_DIM_ENV) {
        opts.sdp.max_dimension = v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("{MAX_SDP_DIM_ENV} must be a positive integer, got {v:?}")))?;
    }
    Ok(opts)
}

fn grid_for(common: &Common, p: &Problem) -> crate::Result<GridSpec> {
    match common.grid.as_deref().or(p.options.grid.as_deref()) {
        Some(s) => parse_grid(s, p.bounding_box.clone()),
        None => {
            let g = GridSpec::default_for(p.system.dimension()).with_box(p.bounding_box.clone());
            g.validate(p.system.dimension())?;
            Ok(g)
        }
    }
}

fn unit_grid_for(common: &Common, p: &Problem) -> crate::Result<GridSpec> {
    let n = p.system.dimension();
    let g = grid_for(common, p)?;
    let g = GridSpec::unit(n, g.points_per_axis, g.refinement_rounds);
    g.validate(n)?;
    Ok(g)
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn cmd_solve(a: &SolveArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let opts = sos_options(a.common.tol.or(p.options.tol))?;
    let level = a.level.or(p.options.level).unwrap_or_else(|| p.default_level());
    if level < p.objective.degree() {
        let v = json!({
            "command": "solve",
            "level": level,
            "found": false,
            "reason": format!("level {level} is below deg f = {}", p.objective.degree()),
        });
        return Outcome::json(&v, EXIT_INCONCLUSIVE);
    }
    let r = lasserre_bound(&p.objective, &p.system, level, &opts)?;
    let cert = r.certificate.as_ref().map(|c| c.to_json_value()).transpose()?;
    let v = json!({
        "command": "solve",
        "level": level,
        "bound_kind": r.kind,
        "lower_bound": num(r.lower_bound),
        "optimal": r.optimal,
        "verification": r.verification,
        "certificate": cert,
        "diagnostics": {
            "status": r.diagnostics.status,
            "iterations": r.diagnostics.iterations,
            "primal_residual": num(r.diagnostics.primal_residual),
            "min_eigenvalue": num(r.diagnostics.min_eigenvalue),
            "dual_objective": num(r.diagnostics.dual_objective),
            "infeasibility": num(r.diagnostics.infeasibility),
        },
    });
    let code = if r.kind == BoundKind::Finite { EXIT_OK } else { EXIT_INCONCLUSIVE };
    Outcome::json(&v, code)
}

fn membership_json(command: &str, level: u32, mode: ModeArg, m: &Membership, target: &Polynomial, tol: f64) -> crate::Result<Outcome> {
    match m {
        Membership::Found(c) => {
            let report = c.verify_with(target, tol, DEFAULT_PSD_TOL);
            let v = json!({
                "command": command,
                "level": level,
                "mode": mode,
                "found": true,
                "target": target.to_string(),
                "verification": report,
                "certificate": c.to_json_value()?,
            });
            Outcome::json(&v, EXIT_OK)
        }
        Membership::NotFound(nf) => {
            let v = json!({
                "command": command,
                "level": level,
                "mode": mode,
                "found": false,
                "inconclusive": true,
                "target": target.to_string(),
                "reason": nf.reason,
                "sdp_status": nf.sdp_status,
                "primal_residual": nf.primal_residual.map(num),
                "infeasibility": nf.infeasibility.map(num),
            });
            Outcome::json(&v, EXIT_INCONCLUSIVE)
        }
    }
}

fn cmd_certify(a: &CertifyArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let opts = sos_options(a.common.tol.or(p.options.tol))?;
    let mode = a.mode.or(p.options.mode).unwrap_or(ModeArg::QuadraticModule);
    if let Some(big_n) = a.archimedean {
        let level = a.level.or(p.options.level).unwrap_or(2);
        if mode != ModeArg::QuadraticModule {
            return Err(Error::Argument("--archimedean searches the quadratic module only".into()));
        }
        let n = p.system.dimension();
        let mut target = Polynomial::constant(n, big_n);
        for i in 0..n {
            target = target.sub(&Polynomial::variable(n, i).pow(2))?;
        }
        let m = match archimedean_witness(&p.system, big_n, level, &opts)? {
            Some(c) => Membership::Found(c),
            None => Membership::NotFound(sos::NotFound {
                level,
                reason: format!("no certificate for {target} at level {level}"),
                sdp_status: None,
                primal_residual: None,
                infeasibility: None,
            }),
        };
        return membership_json("certify", level, mode, &m, &target, opts.residual_tol);
    }
    let level = a.level.or(p.options.level).unwrap_or_else(|| p.default_level());
    let problem = MembershipProblem {
        target: p.objective.clone(),
        system: p.system.clone(),
        level,
        mode: match mode {
            ModeArg::QuadraticModule => MembershipMode::QuadraticModule,
            ModeArg::Preordering => MembershipMode::Preordering,
        },
    };
    let m = sos::membership(&problem, &opts)?;
    membership_json("certify", level, mode, &m, &p.objective, opts.residual_tol)
}

fn cmd_verify(a: &VerifyArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let tol = a.common.tol.or(p.options.tol).unwrap_or(sos::DEFAULT_RESIDUAL_TOL);
    let text = std::fs::read_to_string(&a.certificate)?;
    let mut value: Value = serde_json::from_str(&text)?;
    if let Some(inner) = value.get_mut("certificate") {
        value = inner.take();
    }
    if value.is_null() {
        return Err(Error::Schema("file holds no certificate".into()));
    }
    let cert = Certificate::from_json_value(value)?;
    if cert.system.constraints() != p.system.constraints() {
        return Err(Error::Schema(
            "certificate generators differ from the problem constraints".into(),
        ));
    }
    let target = match a.target {
        TargetArg::Objective => p.objective.clone(),
        TargetArg::Certificate => cert
            .target
            .clone()
            .ok_or_else(|| Error::Schema("certificate records no target".into()))?,
    };
    let report = cert.verify_with(&target, tol, DEFAULT_PSD_TOL);
    let v = json!({
        "command": "verify",
        "target": target.to_string(),
        "residual_norm": num(report.residual_norm),
        "min_gram_eigenvalue": num(report.min_gram_eigenvalue),
        "level": report.level,
        "pass": report.pass,
        "residual_tol": tol,
    });
    Outcome::json(&v, if report.pass { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_bounds(a: &BoundsArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let c = a.c.or(p.options.c).unwrap_or(1.0);
    let (f_star, source) = match a.f_star {
        Some(v) => (v, "flag".to_string()),
        None => {
            let grid = grid_for(&a.common, &p)?;
            (grid_min(&p.objective, &p.system, &grid)?.minimum_value, "grid".to_string())
        }
    };
    let mut inputs = BoundInputs::new(
        c,
        p.objective.degree(),
        p.system.dimension(),
        p.objective.weighted_norm(),
        f_star,
    );
    if let Some(k) = a.level.or(p.options.level.map(u64::from)) {
        inputs = inputs.with_k(k);
    }
    let report = bounds_report(&inputs)?;
    let mut v = serde_json::to_value(&report)?;
    v["command"] = json!("bounds");
    v["f_star_source"] = json!(source);
    Outcome::json(&v, EXIT_OK)
}

fn cmd_lift(a: &LiftArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let grid = unit_grid_for(&a.common, &p)?;
    let c0 = a.c0.or(p.options.c0).unwrap_or(1.0);
    let c1 = a.c1.or(p.options.c1).unwrap_or(1.0);
    let c2 = a.c2.or(p.options.c2).unwrap_or(1.0);
    let params = lifting_parameters(&p.objective, &p.system, c0, c1, c2, &grid)?;
    let search = a
        .lambda
        .map(|l| find_lifting_k(&p.objective, &p.system, l, &grid, a.k_max))
        .transpose()?;
    let v = json!({
        "command": "lift",
        "grid": { "points_per_axis": grid.points_per_axis, "refinement_rounds": grid.refinement_rounds },
        "parameters": params,
        "search": search,
    });
    Outcome::json(&v, EXIT_OK)
}

/// One row of the convergence table.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub k: u32,
    /// `None` when the level failed.
    pub f_k: Option<f64>,
    pub grid_f_star: f64,
    pub gap: Option<f64>,
    pub gap_bound: Option<f64>,
    pub error: Option<String>,
}

fn csv_num(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn cmd_converge(a: &ConvergeArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let opts = sos_options(a.common.tol.or(p.options.tol))?;
    let levels = match (&a.levels, &p.options.levels) {
        (Some(s), _) => parse_levels(s)?,
        (None, Some(l)) => l.clone(),
        (None, None) => return Err(Error::Argument("converge needs --levels".into())),
    };
    if levels.is_empty() {
        return Err(Error::Argument("level range is empty".into()));
    }
    let d = p.objective.degree();
    if let Some(k) = levels.iter().find(|&&k| k % 2 == 1 || k < d) {
        return Err(Error::Argument(format!(
            "levels must be even and at least deg f = {d}; got {k}"
        )));
    }
    let c = a.c.or(p.options.c).unwrap_or(1.0);
    let grid = grid_for(&a.common, &p)?;
    let f_star = grid_min(&p.objective, &p.system, &grid)?.minimum_value;
    let norm = p.objective.weighted_norm();
    let n = p.system.dimension();
    let mut rows = Vec::with_capacity(levels.len());
    for &k in &levels {
        let gb = if d >= 1 && norm > 0.0 {
            gap_bound(&BoundInputs::new(c, d, n, norm, f_star).with_k(k as u64))?.value()
        } else {
            None
        };
        let row = match lasserre_bound(&p.objective, &p.system, k, &opts) {
            Ok(r) => ConvergeRow {
                k,
                f_k: Some(r.lower_bound),
                grid_f_star: f_star,
                gap: Some(f_star - r.lower_bound),
                gap_bound: gb,
                error: None,
            },
            Err(e @ Error::Solver { .. }) => ConvergeRow {
                k,
                f_k: None,
                grid_f_star: f_star,
                gap: None,
                gap_bound: gb,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let code = if rows.iter().all(|r| r.error.is_some()) { EXIT_SOLVER } else { EXIT_OK };
    match a.common.format {
        Format::Csv => {
            let mut body = String::from("k,f_k,grid_f_star,gap,gap_bound\n");
            for r in &rows {
                let opt = |v: Option<f64>| v.map(csv_num).unwrap_or_else(|| "NA".into());
                let fk = if r.error.is_some() { "ERROR".to_string() } else { opt(r.f_k) };
                let gap = if r.error.is_some() { "ERROR".to_string() } else { opt(r.gap) };
                let _ = writeln!(body, "{},{},{},{},{}", r.k, fk, csv_num(r.grid_f_star), gap, opt(r.gap_bound));
            }
            Ok(Outcome { body, code })
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "k": r.k,
                        "f_k": r.f_k.map(num),
                        "grid_f_star": num(r.grid_f_star),
                        "gap": r.gap.map(num),
                        "gap_bound": r.gap_bound.map(num),
                        "error": r.error,
                    })
                })
                .collect();
            let v = json!({ "command": "converge", "c": c, "rows": rows });
            Outcome::json(&v, code)
        }
    }
}

fn cmd_estimate(a: &EstimateArgs) -> crate::Result<Outcome> {
    let p = Problem::load(&a.common.input)?;
    let grid = grid_for(&a.common, &p)?;
    let samples = a.samples.or(p.options.samples).unwrap_or(1000);
    let seed = a.seed.or(p.options.seed).unwrap_or(DEFAULT_SEED);
    let fit = lojasiewicz_estimate(&p.system, &grid, samples, seed)?;
    let rounded = match a.d_max {
        None => Value::Null,
        Some(d_max) => match round_hypercube_degree(&p.system, &grid, d_max) {
            Ok(Some((d, pd))) => json!({ "d": d, "p_d": pd.to_string() }),
            Ok(None) => json!({ "d": null, "reason": format!("no d <= {d_max} works on the grid") }),
            Err(e @ Error::Argument(_)) => json!({ "d": null, "reason": e.to_string() }),
            Err(e) => return Err(e),
        },
    };
    let v = json!({
        "command": "estimate",
        "lojasiewicz": fit,
        "rounded_hypercube": rounded,
    });
    Outcome::json(&v, EXIT_OK)
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Solve(a) => &a.common,
        Command::Certify(a) => &a.common,
        Command::Verify(a) => &a.common,
        Command::Bounds(a) => &a.common,
        Command::Lift(a) => &a.common,
        Command::Converge(a) => &a.common,
        Command::Estimate(a) => &a.common,
    }
}

fn dispatch(cmd: &Command) -> crate::Result<Outcome> {
    if common(cmd).format == Format::Csv && !matches!(cmd, Command::Converge(_)) {
        return Err(Error::Argument("--format csv is only available for converge".into()));
    }
    match cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Lift(a) => cmd_lift(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Estimate(a) => cmd_estimate(a),
    }
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `out` (or `--output`) and messages to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let outcome = match dispatch(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &common(&cli.command).output {
        Some(path) => std::fs::write(path, &outcome.body),
        None => out.write_all(outcome.body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    outcome.code
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
