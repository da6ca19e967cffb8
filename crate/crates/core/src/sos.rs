//! Truncated quadratic modules `M(g, k)` and preorderings `T(g, k)` as SDP
//! feasibility problems, and the relaxation bound
//! `f_k* = sup { a : f - a in M(g, k) }` as an SDP optimization.
//!
//! A member is written `sum_j (z_j^T Q_j z_j) h_j` where `h_j` runs over the
//! generators (`1, g_1, ..., g_m` for the module, all products `g^delta` for
//! the preordering), `z_j` is the monomial vector of degree
//! `floor((k - deg h_j) / 2)` and `Q_j` is PSD. One linear constraint per
//! monomial of degree `<= k` matches coefficients with the target.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateEntry, CertificateMode, GeneratorIndex, VerificationReport};
use crate::error::{argument, Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpStatus, SymEntry};
use crate::semialg::SemialgebraicSystem;

pub const DEFAULT_BASIS_CAP: usize = 2000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const MAX_PREORDERING_GENERATORS: usize = 12;

/// All monomials of degree `<= max_degree` in graded order.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    n: usize,
    max_degree: u32,
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// `z^T Q z` as a polynomial.
    pub fn quadratic_form(&self, q: &DMatrix<f64>) -> Result<Polynomial> {
        let s = self.len();
        if q.nrows() != s || q.ncols() != s {
            return argument(format!(
                "Gram matrix is {}x{}, basis has {s} monomials",
                q.nrows(),
                q.ncols()
            ));
        }
        let mut terms = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                terms.push((self.monomials[i].mul(&self.monomials[j]), q[(i, j)]));
            }
        }
        Polynomial::from_terms(self.n, terms)
    }

    /// `sum_j c_j z_j` for a coefficient vector.
    pub fn linear_form(&self, coeffs: &[f64]) -> Result<Polynomial> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: coeffs.len(),
            });
        }
        Polynomial::from_terms(
            self.n,
            self.monomials.iter().cloned().zip(coeffs.iter().copied()),
        )
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomials of degree `<= d` in `n` variables; `binom(n + d, n)` of them.
pub fn monomial_basis(n: usize, d: u32) -> Result<MonomialBasis> {
    monomial_basis_capped(n, d, DEFAULT_BASIS_CAP)
}

pub fn monomial_basis_capped(n: usize, d: u32, cap: usize) -> Result<MonomialBasis> {
    if n == 0 {
        return argument("basis needs n >= 1");
    }
    let size = binomial(n + d as usize, n);
    if size > cap as f64 {
        return Err(Error::Capacity(format!(
            "monomial basis of size {size:.0} exceeds cap {cap}"
        )));
    }
    let mut monomials = Vec::with_capacity(size as usize);
    for deg in 0..=d {
        // exponent vectors of total degree `deg`, first variable largest first
        let mut e = vec![0u32; n];
        e[0] = deg;
        loop {
            monomials.push(Monomial::new(e.clone()));
            // next composition in the order (deg,0,..) > (deg-1,1,..) > ...
            let Some(last_nonzero) = (0..n - 1).rev().find(|&i| e[i] > 0) else {
                break;
            };
            e[last_nonzero] -= 1;
            let tail: u32 = e[last_nonzero + 1..].iter().sum::<u32>() + 1;
            for v in e[last_nonzero + 1..].iter_mut() {
                *v = 0;
            }
            e[last_nonzero + 1] = tail;
        }
    }
    debug_assert!(monomials.windows(2).all(|w| w[0] < w[1]));
    Ok(MonomialBasis {
        n,
        max_degree: d,
        monomials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipMode {
    QuadraticModule,
    Preordering,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipProblem {
    pub target: Polynomial,
    pub system: SemialgebraicSystem,
    pub level: u32,
    pub mode: MembershipMode,
}

/// Why a search came back empty. Always inconclusive: failing at level `k`
/// says nothing about higher levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotFound {
    pub level: u32,
    pub reason: String,
    pub sdp_status: Option<SdpStatus>,
    pub primal_residual: Option<f64>,
    /// Smallest l1 coefficient mismatch the solver could reach.
    pub infeasibility: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Found(Certificate),
    NotFound(NotFound),
}

impl Membership {
    pub fn is_found(&self) -> bool {
        matches!(self, Membership::Found(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Membership::Found(c) => Some(c),
            Membership::NotFound(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SosOptions {
    pub sdp: SdpOptions,
    pub residual_tol: f64,
    pub basis_cap: usize,
}

impl Default for SosOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            residual_tol: DEFAULT_RESIDUAL_TOL,
            basis_cap: DEFAULT_BASIS_CAP,
        }
    }
}

/// Generators of one cone with their labels.
fn generators(system: &SemialgebraicSystem, mode: MembershipMode) -> Result<Vec<(GeneratorIndex, Polynomial)>> {
    match mode {
        MembershipMode::QuadraticModule => (0..=system.len())
            .map(|i| Ok((GeneratorIndex::Index(i), system.generator(i).expect("in range"))))
            .collect(),
        MembershipMode::Preordering => {
            let m = system.len();
            if m > MAX_PREORDERING_GENERATORS {
                return Err(Error::Capacity(format!(
                    "preordering with {m} generators needs 2^{m} Gram blocks (max {MAX_PREORDERING_GENERATORS})"
                )));
            }
            (0..1usize << m)
                .map(|t| {
                    let delta: Vec<u8> = (0..m).map(|i| ((t >> i) & 1) as u8).collect();
                    let g = system.product(&delta)?;
                    Ok((GeneratorIndex::Delta(delta), g))
                })
                .collect()
        }
    }
}

/// SDP layout for `target in cone(generators, level)`.
struct Layout {
    blocks: Vec<(GeneratorIndex, Polynomial, MonomialBasis)>,
    rows: Vec<Monomial>,
    problem: SdpProblem,
}

fn build_layout(
    target: &Polynomial,
    system: &SemialgebraicSystem,
    level: u32,
    mode: MembershipMode,
    opts: &SosOptions,
) -> Result<Layout> {
    let n = system.dimension();
    let rows = monomial_basis_capped(n, level, usize::MAX)?.monomials;
    let row_of: HashMap<&Monomial, usize> = rows.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut blocks = Vec::new();
    for (idx, g) in generators(system, mode)? {
        if g.is_zero() || g.degree() > level {
            continue;
        }
        let basis = monomial_basis_capped(n, (level - g.degree()) / 2, opts.basis_cap)?;
        blocks.push((idx, g, basis));
    }
    let mut problem = SdpProblem::new(blocks.iter().map(|(_, _, b)| b.len()).collect());
    let mut entries: Vec<Vec<SymEntry>> = vec![Vec::new(); rows.len()];
    for (blk, (_, g, basis)) in blocks.iter().enumerate() {
        let ms = basis.monomials();
        for p in 0..ms.len() {
            for q in p..ms.len() {
                let pq = ms[p].mul(&ms[q]);
                for (gm, gc) in g.terms() {
                    let alpha = pq.mul(gm);
                    let row = row_of[&alpha];
                    entries[row].push(SymEntry::new(blk, p, q, gc));
                }
            }
        }
    }
    for (row, m) in entries.into_iter().zip(&rows) {
        problem.add_constraint(row, target.coefficient(m));
    }
    Ok(Layout {
        blocks,
        rows,
        problem,
    })
}

fn certificate_from(
    layout: Layout,
    system: &SemialgebraicSystem,
    mode: MembershipMode,
    level: u32,
    grams: Vec<DMatrix<f64>>,
    target: Polynomial,
) -> Certificate {
    let entries = layout
        .blocks
        .into_iter()
        .zip(grams)
        .map(|((index, _, basis), gram)| CertificateEntry { index, basis, gram })
        .collect();
    Certificate {
        mode: match mode {
            MembershipMode::QuadraticModule => CertificateMode::QuadraticModule,
            MembershipMode::Preordering => CertificateMode::Preordering,
        },
        system: system.clone(),
        level,
        entries,
        target: Some(target),
    }
}

fn search(p: &MembershipProblem, opts: &SosOptions) -> Result<Membership> {
    let n = p.system.dimension();
    if p.target.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.target.dimension(),
        });
    }
    if p.level < p.target.degree() {
        return Ok(Membership::NotFound(NotFound {
            level: p.level,
            reason: format!(
                "level {} is below deg f = {}",
                p.level,
                p.target.degree()
            ),
            sdp_status: None,
            primal_residual: None,
            infeasibility: None,
        }));
    }
    let layout = build_layout(&p.target, &p.system, p.level, p.mode, opts)?;
    let sol = sdp::solve(&layout.problem, &opts.sdp)?;
    if !sol.status.has_point() {
        return Ok(Membership::NotFound(NotFound {
            level: p.level,
            reason: format!("SDP returned {:?}", sol.status),
            sdp_status: Some(sol.status),
            primal_residual: Some(sol.primal_residual),
            infeasibility: Some(sol.infeasibility),
        }));
    }
    let cert = certificate_from(layout, &p.system, p.mode, p.level, sol.block_values, p.target.clone());
    let report = cert.verify_with(&p.target, opts.residual_tol, opts.sdp.psd_tol);
    if !report.pass {
        return Ok(Membership::NotFound(NotFound {
            level: p.level,
            reason: format!(
                "certificate failed verification (residual {:e}, min eigenvalue {:e})",
                report.residual_norm, report.min_gram_eigenvalue
            ),
            sdp_status: Some(sol.status),
            primal_residual: Some(sol.primal_residual),
            infeasibility: Some(sol.infeasibility),
        }));
    }
    Ok(Membership::Found(cert))
}

/// Searches for `target in M(g, k)`.
pub fn module_membership(p: &MembershipProblem, opts: &SosOptions) -> Result<Membership> {
    if p.mode != MembershipMode::QuadraticModule {
        return argument("module_membership needs mode quadratic_module");
    }
    search(p, opts)
}

/// Searches for `target in T(g, k)`, with one Gram block per `delta in {0,1}^m`.
pub fn preordering_membership(p: &MembershipProblem, opts: &SosOptions) -> Result<Membership> {
    if p.mode != MembershipMode::Preordering {
        return argument("preordering_membership needs mode preordering");
    }
    search(p, opts)
}

/// Dispatches on `p.mode`.
pub fn membership(p: &MembershipProblem, opts: &SosOptions) -> Result<Membership> {
    search(p, opts)
}

/// Gram representation of `f` as a plain sum of squares.
pub fn sos_decompose(f: &Polynomial, opts: &SosOptions) -> Result<Membership> {
    let n = f.dimension();
    let d = f.degree();
    if d % 2 == 1 {
        return Ok(Membership::NotFound(NotFound {
            level: d,
            reason: format!("odd degree {d}"),
            sdp_status: None,
            primal_residual: None,
            infeasibility: None,
        }));
    }
    let system = SemialgebraicSystem::unconstrained(n);
    if f.is_zero() {
        let basis = monomial_basis(n, 0)?;
        return Ok(Membership::Found(Certificate {
            mode: CertificateMode::QuadraticModule,
            system,
            level: 0,
            entries: vec![CertificateEntry {
                index: GeneratorIndex::Index(0),
                basis,
                gram: DMatrix::zeros(1, 1),
            }],
            target: Some(f.clone()),
        }));
    }
    search(
        &MembershipProblem {
            target: f.clone(),
            system,
            level: d,
            mode: MembershipMode::QuadraticModule,
        },
        opts,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Finite,
    /// No `a` makes `f - a` a member at this level.
    MinusInfinity,
    /// Every `a` works; `S` is empty as far as level `k` can tell.
    PlusInfinity,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpDiagnostics {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub min_eigenvalue: f64,
    pub dual_objective: f64,
    pub infeasibility: f64,
}

#[derive(Clone, Debug)]
pub struct LasserreResult {
    pub level: u32,
    pub kind: BoundKind,
    /// `f_k*`; infinite unless `kind` is `Finite`.
    pub lower_bound: f64,
    /// Certificate for `f - f_k*` in `M(g, k)`.
    pub certificate: Option<Certificate>,
    pub verification: Option<VerificationReport>,
    /// False when the solver produced a feasible but not provably optimal point;
    /// `lower_bound` is then still a valid lower bound.
    pub optimal: bool,
    pub diagnostics: SdpDiagnostics,
}

/// `f_k* = sup { a : f - a in M(g, k) }`.
///
/// `a` is eliminated: it only enters the constant coefficient, so maximizing
/// `a` is the same as minimizing the constant coefficient of
/// `sum_j sigma_j g_j` subject to matching every other coefficient of `f`.
pub fn lasserre_bound(
    f: &Polynomial,
    system: &SemialgebraicSystem,
    level: u32,
    opts: &SosOptions,
) -> Result<LasserreResult> {
    let n = system.dimension();
    if f.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dimension(),
        });
    }
    if level < f.degree() {
        return argument(format!(
            "level {level} is below deg f = {}",
            f.degree()
        ));
    }
    let mut layout = build_layout(f, system, level, MembershipMode::QuadraticModule, opts)?;
    debug_assert_eq!(layout.rows[0], Monomial::one(n));
    let constant_row = layout.problem.constraints.remove(0);
    layout.rows.remove(0);
    layout.problem.objective = constant_row.entries;
    let f0 = f.constant_term();

    let sol = sdp::solve(&layout.problem, &opts.sdp)?;
    let diagnostics = SdpDiagnostics {
        status: sol.status,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        min_eigenvalue: sol.min_eigenvalue,
        dual_objective: sol.dual_objective,
        infeasibility: sol.infeasibility,
    };
    let empty = |kind: BoundKind, lower_bound: f64, diagnostics: SdpDiagnostics| LasserreResult {
        level,
        kind,
        lower_bound,
        certificate: None,
        verification: None,
        optimal: true,
        diagnostics,
    };
    match sol.status {
        SdpStatus::InfeasibleDetected => {
            return Ok(empty(BoundKind::MinusInfinity, f64::NEG_INFINITY, diagnostics))
        }
        SdpStatus::Unbounded => return Ok(empty(BoundKind::PlusInfinity, f64::INFINITY, diagnostics)),
        SdpStatus::MaxIterations => {
            return Err(Error::Solver {
                message: format!("relaxation at level {level} did not converge"),
                iterations: sol.iterations,
                primal_residual: sol.primal_residual,
            })
        }
        SdpStatus::Optimal | SdpStatus::Feasible => {}
    }
    let a = f0 - sol.objective_value;
    let target = f.add_constant(-a);
    let optimal = sol.status == SdpStatus::Optimal;
    let cert = certificate_from(
        layout,
        system,
        MembershipMode::QuadraticModule,
        level,
        sol.block_values,
        target.clone(),
    );
    let report = cert.verify_with(&target, opts.residual_tol, opts.sdp.psd_tol);
    Ok(LasserreResult {
        level,
        kind: BoundKind::Finite,
        lower_bound: a,
        certificate: Some(cert),
        verification: Some(report),
        optimal,
        diagnostics,
    })
}
