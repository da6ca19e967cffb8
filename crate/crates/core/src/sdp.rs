//! Small dense semidefinite programs in block form.
//!
//! ```text
//! minimize    sum_b <C_b, X_b>
//! subject to  sum_b <A_ib, X_b> = b_i      i = 1..m
//!             X_b PSD
//! ```
//!
//! Solved by a primal-dual interior-point method (HKM search direction,
//! Mehrotra predictor-corrector) run in two phases:
//!
//! 1. An elastic problem `min sum(u + v)` s.t. `A(X) + u - v = b`, `X PSD`,
//!    `u, v >= 0`, which is always strictly feasible. Its optimal value is the
//!    smallest l1 constraint violation over PSD `X`. A value above
//!    `infeasibility_tol` is reported as [`SdpStatus::InfeasibleDetected`].
//! 2. The original problem, only when it has a nonzero objective.
//!
//! Returned points are polished by a least-norm correction onto the affine
//! constraints when the raw iterate misses `eq_tol`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of a symmetric coefficient matrix. An off-diagonal entry
/// `(row, col)` stands for both `(row, col)` and `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl SymEntry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        Self {
            block,
            row,
            col,
            value,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearConstraint {
    pub entries: Vec<SymEntry>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub constraints: Vec<LinearConstraint>,
    /// Sparse cost; empty for a pure feasibility problem.
    pub objective: Vec<SymEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Feasible,
    InfeasibleDetected,
    MaxIterations,
    /// The objective decreases without bound over the feasible set.
    Unbounded,
}

impl SdpStatus {
    pub fn has_point(self) -> bool {
        matches!(self, SdpStatus::Optimal | SdpStatus::Feasible)
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub block_values: Vec<DMatrix<f64>>,
    pub objective_value: f64,
    /// Dual objective of the last phase run; a lower bound on the optimum when
    /// the dual iterate is feasible.
    pub dual_objective: f64,
    /// `max_i |<A_i, X> - b_i|`.
    pub primal_residual: f64,
    pub min_eigenvalue: f64,
    /// Smallest l1 constraint violation found in phase 1.
    pub infeasibility: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub eq_tol: f64,
    pub psd_tol: f64,
    /// Phase-1 violation (relative to `1 + ||b||_inf`) above which the problem
    /// is declared infeasible.
    pub infeasibility_tol: f64,
    /// Target for the relative primal/dual residuals and duality gap.
    pub tol: f64,
    /// Duality gap accepted for [`SdpStatus::Optimal`].
    pub gap_tol: f64,
    /// Interior-point iterations per phase.
    pub max_iterations: usize,
    /// Cap on the sum of block sizes.
    pub max_dimension: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            eq_tol: 1e-8,
            psd_tol: 1e-8,
            infeasibility_tol: 1e-6,
            tol: 1e-11,
            gap_tol: 1e-7,
            max_iterations: 150,
            max_dimension: 400,
        }
    }
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        Self {
            blocks,
            ..Self::default()
        }
    }

    pub fn add_constraint(&mut self, entries: Vec<SymEntry>, rhs: f64) {
        self.constraints.push(LinearConstraint { entries, rhs });
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_feasibility(&self) -> bool {
        self.objective.iter().all(|e| e.value == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.blocks.iter().position(|&s| s == 0) {
            return Err(Error::Argument(format!("block {i} has size 0")));
        }
        let check = |e: &SymEntry, what: &str| -> Result<()> {
            let size = *self.blocks.get(e.block).ok_or_else(|| {
                Error::Argument(format!("{what}: block {} out of range", e.block))
            })?;
            if e.row >= size || e.col >= size {
                return Err(Error::Argument(format!(
                    "{what}: entry ({}, {}) outside block {} of size {size}",
                    e.row, e.col, e.block
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::Argument(format!("{what}: non-finite coefficient")));
            }
            Ok(())
        };
        for (i, c) in self.constraints.iter().enumerate() {
            for e in &c.entries {
                check(e, &format!("constraint {i}"))?;
            }
            if !c.rhs.is_finite() {
                return Err(Error::Argument(format!("constraint {i}: non-finite rhs")));
            }
        }
        for e in &self.objective {
            check(e, "objective")?;
        }
        Ok(())
    }

    fn inner(entries: &[SymEntry], x: &[DMatrix<f64>]) -> f64 {
        entries
            .iter()
            .map(|e| {
                let m = &x[e.block];
                if e.row == e.col {
                    e.value * m[(e.row, e.row)]
                } else {
                    e.value * (m[(e.row, e.col)] + m[(e.col, e.row)])
                }
            })
            .sum()
    }

    pub fn objective_value(&self, x: &[DMatrix<f64>]) -> f64 {
        Self::inner(&self.objective, x)
    }

    /// `max_i |<A_i, X> - b_i|`.
    pub fn primal_residual(&self, x: &[DMatrix<f64>]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (Self::inner(&c.entries, x) - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: block sizes, then `constraint block row col value`
    /// lines, then `objective block row col value` lines. Indices are 0-based.
    pub fn to_debug_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "blocks {}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "sizes {}", sizes.join(" "));
        let _ = writeln!(s, "constraints {}", self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "rhs {i} {:?}", c.rhs);
            for e in &c.entries {
                let _ = writeln!(s, "{i} {} {} {} {:?}", e.block, e.row, e.col, e.value);
            }
        }
        let _ = writeln!(s, "objective {}", self.objective.len());
        for e in &self.objective {
            let _ = writeln!(s, "{} {} {} {:?}", e.block, e.row, e.col, e.value);
        }
        s
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

fn min_eigenvalue_blocks(x: &[DMatrix<f64>]) -> f64 {
    x.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// compiled form

type FullEntries = Vec<(usize, usize, f64)>;

#[derive(Clone, Debug)]
struct Compiled {
    sizes: Vec<usize>,
    lp: usize,
    m: usize,
    b: DVector<f64>,
    c_psd: Vec<DMatrix<f64>>,
    c_lp: DVector<f64>,
    /// Per block: rows touching it with their fully expanded entries.
    block_rows: Vec<Vec<(usize, FullEntries)>>,
    /// Per LP variable: rows touching it.
    lp_rows: Vec<Vec<(usize, f64)>>,
    /// Per row: LP coefficients.
    row_lp: Vec<Vec<(usize, f64)>>,
}

impl Compiled {
    /// Builds the compiled form, dropping rows without coefficients.
    /// Returns the kept row indices alongside.
    fn new(p: &SdpProblem) -> (Self, Vec<usize>) {
        let mut kept = Vec::new();
        let mut merged_rows = Vec::new();
        for (i, c) in p.constraints.iter().enumerate() {
            let mut merged: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
            for e in &c.entries {
                let (r, col) = if e.row <= e.col {
                    (e.row, e.col)
                } else {
                    (e.col, e.row)
                };
                *merged.entry((e.block, r, col)).or_insert(0.0) += e.value;
            }
            merged.retain(|_, v| *v != 0.0);
            if !merged.is_empty() {
                kept.push(i);
                merged_rows.push((merged, c.rhs));
            }
        }
        let m = merged_rows.len();
        let mut block_rows: Vec<Vec<(usize, FullEntries)>> = vec![Vec::new(); p.blocks.len()];
        for (i, (merged, _)) in merged_rows.iter().enumerate() {
            let mut per_block: BTreeMap<usize, FullEntries> = BTreeMap::new();
            for (&(blk, r, c), &v) in merged {
                let list = per_block.entry(blk).or_default();
                list.push((r, c, v));
                if r != c {
                    list.push((c, r, v));
                }
            }
            for (blk, list) in per_block {
                block_rows[blk].push((i, list));
            }
        }
        let b = DVector::from_iterator(m, merged_rows.iter().map(|(_, r)| *r));
        let mut c_psd: Vec<DMatrix<f64>> =
            p.blocks.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for e in &p.objective {
            c_psd[e.block][(e.row, e.col)] += e.value;
            if e.row != e.col {
                c_psd[e.block][(e.col, e.row)] += e.value;
            }
        }
        (
            Self {
                sizes: p.blocks.clone(),
                lp: 0,
                m,
                b,
                c_psd,
                c_lp: DVector::zeros(0),
                block_rows,
                lp_rows: Vec::new(),
                row_lp: vec![Vec::new(); m],
            },
            kept,
        )
    }

    /// Elastic variant: `A(X) + u - v = b`, cost `sum(u + v)`.
    fn elastic(&self) -> Self {
        let mut e = self.clone();
        e.lp = 2 * self.m;
        e.c_psd = self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        e.c_lp = DVector::from_element(e.lp, 1.0);
        e.lp_rows = (0..e.lp).map(|l| vec![(l / 2, if l % 2 == 0 { 1.0 } else { -1.0 })]).collect();
        e.row_lp = (0..self.m).map(|i| vec![(2 * i, 1.0), (2 * i + 1, -1.0)]).collect();
        e
    }

    fn n_total(&self) -> f64 {
        (self.sizes.iter().sum::<usize>() + self.lp) as f64
    }

    /// `A(Y, y_lp)`. Works for non-symmetric `Y` (implicitly symmetrized).
    fn apply(&self, y: &[DMatrix<f64>], y_lp: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, rows) in self.block_rows.iter().enumerate() {
            let mat = &y[blk];
            for (i, entries) in rows {
                out[*i] += entries.iter().map(|&(p, q, a)| a * mat[(p, q)]).sum::<f64>();
            }
        }
        for (i, lps) in self.row_lp.iter().enumerate() {
            out[i] += lps.iter().map(|&(l, a)| a * y_lp[l]).sum::<f64>();
        }
        out
    }

    fn adjoint(&self, w: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut mats: Vec<DMatrix<f64>> = self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (blk, rows) in self.block_rows.iter().enumerate() {
            for (i, entries) in rows {
                let wi = w[*i];
                if wi == 0.0 {
                    continue;
                }
                for &(p, q, a) in entries {
                    mats[blk][(p, q)] += wi * a;
                }
            }
        }
        let mut lp = DVector::zeros(self.lp);
        for (l, rows) in self.lp_rows.iter().enumerate() {
            lp[l] = rows.iter().map(|&(i, a)| a * w[i]).sum();
        }
        (mats, lp)
    }

    fn schur(&self, s: &State, w: &[DMatrix<f64>], wl: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m, self.m);
        for (blk, rows) in self.block_rows.iter().enumerate() {
            let x = &s.x[blk];
            let wb = &w[blk];
            for (ai, (i, ei)) in rows.iter().enumerate() {
                for (j, ej) in rows[ai..].iter() {
                    let mut acc = 0.0;
                    for &(p, q, a) in ei {
                        for &(r, t, b) in ej {
                            acc += a * b * x[(q, r)] * wb[(t, p)];
                        }
                    }
                    m[(*i, *j)] += acc;
                    if i != j {
                        m[(*j, *i)] += acc;
                    }
                }
            }
        }
        for (l, rows) in self.lp_rows.iter().enumerate() {
            let f = s.xl[l] * wl[l];
            for &(i, a) in rows {
                for &(j, b) in rows {
                    m[(i, j)] += a * b * f;
                }
            }
        }
        m
    }
}

fn frob(ms: &[DMatrix<f64>], v: &DVector<f64>) -> f64 {
    (ms.iter().map(|m| m.norm_squared()).sum::<f64>() + v.norm_squared()).sqrt()
}

fn inner_blocks(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Clone, Debug)]
struct State {
    x: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
    zl: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dzl: DVector<f64>,
}

#[derive(Clone, Debug)]
struct Measures {
    pinf: f64,
    dinf: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    mu: f64,
}

impl Measures {
    fn merit(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.gap)
    }
}

struct Outcome {
    state: State,
    measures: Measures,
    iterations: usize,
    converged: bool,
    diverged: bool,
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| sym(&c.inverse()))
}

/// Largest `alpha` with `x + alpha dx` PSD.
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(a) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(t) = l.solve_lower_triangular(&a.transpose()) else {
        return 0.0;
    };
    let lam = sym(&t).symmetric_eigenvalues().min();
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&xi, &d)| -xi / d)
        .fold(f64::INFINITY, f64::min)
}

fn cholesky_regularized(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    let mut reg = 1e-14;
    while reg < 1e-4 {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += reg * scale;
        }
        if let Some(c) = mm.cholesky() {
            return Some(c);
        }
        reg *= 100.0;
    }
    None
}

impl Compiled {
    fn measures(&self, s: &State) -> Measures {
        let ax = self.apply(&s.x, &s.xl);
        let rp = &self.b - ax;
        let (aty, aty_lp) = self.adjoint(&s.y);
        let rd: Vec<DMatrix<f64>> = self
            .c_psd
            .iter()
            .zip(&aty)
            .zip(&s.z)
            .map(|((c, a), z)| c - a - z)
            .collect();
        let rd_lp = &self.c_lp - aty_lp - &s.zl;
        let pobj = inner_blocks(&self.c_psd, &s.x) + self.c_lp.dot(&s.xl);
        let dobj = self.b.dot(&s.y);
        let cnorm = frob(&self.c_psd, &self.c_lp);
        let mu = (inner_blocks(&s.x, &s.z) + s.xl.dot(&s.zl)) / self.n_total();
        Measures {
            pinf: rp.norm() / (1.0 + self.b.norm()),
            dinf: frob(&rd, &rd_lp) / (1.0 + cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            pobj,
            dobj,
            mu,
        }
    }

    fn initial_state(&self) -> State {
        let row_norms: Vec<f64> = {
            let mut sq = vec![0.0; self.m];
            for rows in &self.block_rows {
                for (i, e) in rows {
                    sq[*i] += e.iter().map(|&(_, _, a)| a * a).sum::<f64>();
                }
            }
            for (i, lps) in self.row_lp.iter().enumerate() {
                sq[i] += lps.iter().map(|&(_, a)| a * a).sum::<f64>();
            }
            sq.into_iter().map(f64::sqrt).collect()
        };
        let ratio = (0..self.m)
            .map(|i| (1.0 + self.b[i].abs()) / (1.0 + row_norms[i]))
            .fold(0.0, f64::max);
        let amax = row_norms.iter().copied().fold(0.0, f64::max);
        let cnorm = frob(&self.c_psd, &self.c_lp);
        let x: Vec<DMatrix<f64>> = self
            .sizes
            .iter()
            .map(|&s| {
                let sf = s as f64;
                let xi = 10f64.max(sf.sqrt()).max(sf * ratio);
                DMatrix::identity(s, s) * xi
            })
            .collect();
        let z: Vec<DMatrix<f64>> = self
            .sizes
            .iter()
            .map(|&s| {
                let sf = s as f64;
                let eta = 10f64.max(sf.sqrt()).max(cnorm).max(amax);
                DMatrix::identity(s, s) * eta
            })
            .collect();
        let xi_lp = 10f64.max(ratio);
        let eta_lp = 10f64.max(cnorm).max(amax);
        State {
            x,
            xl: DVector::from_element(self.lp, xi_lp),
            y: DVector::zeros(self.m),
            z,
            zl: DVector::from_element(self.lp, eta_lp),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        s: &State,
        w: &[DMatrix<f64>],
        wl: &DVector<f64>,
        chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rd_lp: &DVector<f64>,
        rc: &[DMatrix<f64>],
        rc_lp: &DVector<f64>,
    ) -> Direction {
        // rhs = rp - A(Rc - X Rd W)
        let t: Vec<DMatrix<f64>> = rc
            .iter()
            .zip(&s.x)
            .zip(rd)
            .zip(w)
            .map(|(((rc, x), rd), w)| rc - x * rd * w)
            .collect();
        let t_lp = DVector::from_iterator(
            self.lp,
            (0..self.lp).map(|l| rc_lp[l] - s.xl[l] * rd_lp[l] * wl[l]),
        );
        let rhs = rp - self.apply(&t, &t_lp);
        let dy = chol.solve(&rhs);
        let (aty, aty_lp) = self.adjoint(&dy);
        let dz: Vec<DMatrix<f64>> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let dzl = rd_lp - aty_lp;
        let dx: Vec<DMatrix<f64>> = rc
            .iter()
            .zip(&s.x)
            .zip(&dz)
            .zip(w)
            .map(|(((rc, x), dz), w)| rc - sym(&(x * dz * w)))
            .collect();
        let dxl = DVector::from_iterator(
            self.lp,
            (0..self.lp).map(|l| rc_lp[l] - s.xl[l] * dzl[l] * wl[l]),
        );
        Direction {
            dx,
            dxl,
            dy,
            dz,
            dzl,
        }
    }

    fn step_lengths(&self, s: &State, d: &Direction) -> (f64, f64) {
        let ap = s
            .x
            .iter()
            .zip(&d.dx)
            .map(|(x, dx)| max_step_psd(x, dx))
            .fold(max_step_lp(&s.xl, &d.dxl), f64::min);
        let ad = s
            .z
            .iter()
            .zip(&d.dz)
            .map(|(z, dz)| max_step_psd(z, dz))
            .fold(max_step_lp(&s.zl, &d.dzl), f64::min);
        (ap, ad)
    }

    fn run(&self, opts: &SdpOptions) -> Outcome {
        let mut s = self.initial_state();
        let mut best = (s.clone(), self.measures(&s));
        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        let mut diverged = false;
        let mut iterations = 0;
        let n_total = self.n_total();

        for iter in 0..opts.max_iterations {
            iterations = iter + 1;
            let meas = self.measures(&s);
            if meas.merit() < best.1.merit() {
                best = (s.clone(), meas.clone());
            }
            if meas.merit() < opts.tol {
                converged = true;
                break;
            }
            let xnorm = frob(&s.x, &s.xl);
            if !xnorm.is_finite() || xnorm > 1e14 || meas.pobj < -1e14 {
                diverged = true;
                break;
            }
            history.push(meas.merit());
            if history.len() > 15 {
                let old = history[history.len() - 16];
                if meas.merit() > 0.5 * old && meas.merit() < 1e-8 {
                    // stalled at a good accuracy
                    converged = best.1.merit() < 1e-8;
                    break;
                }
            }

            let w: Option<Vec<DMatrix<f64>>> = s.z.iter().map(inverse_spd).collect();
            let Some(w) = w else { break };
            let wl = s.zl.map(|v| 1.0 / v);
            let schur = self.schur(&s, &w, &wl);
            let Some(chol) = cholesky_regularized(&schur) else {
                break;
            };

            let rp = &self.b - self.apply(&s.x, &s.xl);
            let (aty, aty_lp) = self.adjoint(&s.y);
            let rd: Vec<DMatrix<f64>> = self
                .c_psd
                .iter()
                .zip(&aty)
                .zip(&s.z)
                .map(|((c, a), z)| c - a - z)
                .collect();
            let rd_lp = &self.c_lp - aty_lp - &s.zl;
            let mu = meas.mu;

            // predictor
            let rc: Vec<DMatrix<f64>> = s.x.iter().map(|x| -x).collect();
            let rc_lp = -&s.xl;
            let pred = self.direction(&s, &w, &wl, &chol, &rp, &rd, &rd_lp, &rc, &rc_lp);
            let (ap, ad) = self.step_lengths(&s, &pred);
            let ap = ap.min(1.0);
            let ad = ad.min(1.0);
            let mut mu_aff = 0.0;
            for b in 0..self.sizes.len() {
                let xa = &s.x[b] + &pred.dx[b] * ap;
                let za = &s.z[b] + &pred.dz[b] * ad;
                mu_aff += xa.dot(&za);
            }
            let xla = &s.xl + &pred.dxl * ap;
            let zla = &s.zl + &pred.dzl * ad;
            mu_aff += xla.dot(&zla);
            mu_aff /= n_total;
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };

            // corrector
            let rc: Vec<DMatrix<f64>> = (0..self.sizes.len())
                .map(|b| {
                    &w[b] * (sigma * mu) - &s.x[b] - sym(&(&pred.dx[b] * &pred.dz[b] * &w[b]))
                })
                .collect();
            let rc_lp = DVector::from_iterator(
                self.lp,
                (0..self.lp)
                    .map(|l| sigma * mu * wl[l] - s.xl[l] - pred.dxl[l] * pred.dzl[l] * wl[l]),
            );
            let d = self.direction(&s, &w, &wl, &chol, &rp, &rd, &rd_lp, &rc, &rc_lp);
            let (ap, ad) = self.step_lengths(&s, &d);
            let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                break;
            }
            for b in 0..self.sizes.len() {
                s.x[b] = sym(&(&s.x[b] + &d.dx[b] * ap));
                s.z[b] = sym(&(&s.z[b] + &d.dz[b] * ad));
            }
            s.xl += &d.dxl * ap;
            s.zl += &d.dzl * ad;
            s.y += &d.dy * ad;
        }
        let last = self.measures(&s);
        if last.merit() <= best.1.merit() {
            best = (s, last);
        }
        if best.1.merit() < opts.tol {
            converged = true;
        }
        Outcome {
            state: best.0,
            measures: best.1,
            iterations,
            converged,
            diverged,
        }
    }
}

/// Least-norm correction of `x` onto `{A(X) = b}`.
fn polish(problem: &SdpProblem, x: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let (comp, kept) = Compiled::new(problem);
    if comp.m == 0 {
        return x.to_vec();
    }
    let zero_lp = DVector::zeros(0);
    let r = &comp.b - comp.apply(x, &zero_lp);
    // Gram of rows: <A_i, A_j>
    let mut keyed: BTreeMap<(usize, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (blk, rows) in comp.block_rows.iter().enumerate() {
        for (i, entries) in rows {
            for &(p, q, a) in entries {
                keyed.entry((blk, p, q)).or_default().push((*i, a));
            }
        }
    }
    let mut g = DMatrix::zeros(comp.m, comp.m);
    for list in keyed.values() {
        for &(i, a) in list {
            for &(j, b) in list {
                g[(i, j)] += a * b;
            }
        }
    }
    let _ = kept;
    let Some(chol) = cholesky_regularized(&g) else {
        return x.to_vec();
    };
    let lam = chol.solve(&r);
    let (corr, _) = comp.adjoint(&lam);
    x.iter().zip(&corr).map(|(a, c)| sym(&(a + c))).collect()
}

/// Returns the raw point if it meets `eq_tol`, else the polished point when
/// that one does and stays within `psd_tol`.
fn finish_point(problem: &SdpProblem, x: Vec<DMatrix<f64>>, opts: &SdpOptions) -> (Vec<DMatrix<f64>>, f64, f64) {
    let res = problem.primal_residual(&x);
    let eig = min_eigenvalue_blocks(&x);
    if res <= opts.eq_tol && eig >= -opts.psd_tol {
        return (x, res, eig);
    }
    let px = polish(problem, &x);
    let pres = problem.primal_residual(&px);
    let peig = min_eigenvalue_blocks(&px);
    if pres <= opts.eq_tol && peig >= -opts.psd_tol {
        (px, pres, peig)
    } else {
        (x, res, eig)
    }
}

/// Solves a block SDP. Deterministic for identical inputs and options.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let dim = problem.total_dimension();
    if dim > opts.max_dimension {
        return Err(Error::Capacity(format!(
            "SDP dimension {dim} exceeds cap {}",
            opts.max_dimension
        )));
    }
    let zeros: Vec<DMatrix<f64>> = problem.blocks.iter().map(|&s| DMatrix::zeros(s, s)).collect();
    let (comp, kept) = Compiled::new(problem);
    let b_scale = 1.0 + problem.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);

    // rows with no coefficients must have a zero right-hand side
    let trivial_violation: f64 = problem
        .constraints
        .iter()
        .enumerate()
        .filter(|(i, _)| !kept.contains(i))
        .map(|(_, c)| c.rhs.abs())
        .sum();
    if trivial_violation > opts.eq_tol {
        return Ok(SdpSolution {
            status: SdpStatus::InfeasibleDetected,
            primal_residual: problem.primal_residual(&zeros),
            block_values: zeros,
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
            min_eigenvalue: 0.0,
            infeasibility: trivial_violation,
            iterations: 0,
        });
    }

    // phase 1
    let (x1, infeasibility, it1) = if comp.m == 0 {
        let eye: Vec<DMatrix<f64>> = problem.blocks.iter().map(|&s| DMatrix::identity(s, s)).collect();
        (eye, 0.0, 0)
    } else {
        let el = comp.elastic();
        let out = el.run(opts);
        let viol = out.measures.pobj.max(0.0);
        let certified = out.measures.dobj;
        let (x, res, eig) = finish_point(problem, out.state.x.clone(), opts);
        let feasible = res <= opts.eq_tol && eig >= -opts.psd_tol;
        if !feasible {
            let thr = opts.infeasibility_tol * b_scale;
            let infeasible = (out.converged && viol > thr)
                || (out.measures.dinf < 1e-8 && certified > thr);
            return Ok(SdpSolution {
                status: if infeasible {
                    SdpStatus::InfeasibleDetected
                } else {
                    SdpStatus::MaxIterations
                },
                objective_value: problem.objective_value(&x),
                dual_objective: certified,
                primal_residual: res,
                min_eigenvalue: eig,
                block_values: x,
                infeasibility: viol,
                iterations: out.iterations,
            });
        }
        (x, viol, out.iterations)
    };

    if problem.is_feasibility() {
        let res = problem.primal_residual(&x1);
        let eig = min_eigenvalue_blocks(&x1);
        return Ok(SdpSolution {
            status: SdpStatus::Feasible,
            objective_value: 0.0,
            dual_objective: 0.0,
            primal_residual: res,
            min_eigenvalue: eig,
            block_values: x1,
            infeasibility,
            iterations: it1,
        });
    }

    // phase 2
    let out = comp.run(opts);
    let iterations = it1 + out.iterations;
    if out.diverged {
        return Ok(SdpSolution {
            status: SdpStatus::Unbounded,
            objective_value: f64::NEG_INFINITY,
            dual_objective: out.measures.dobj,
            primal_residual: problem.primal_residual(&out.state.x),
            min_eigenvalue: min_eigenvalue_blocks(&out.state.x),
            block_values: out.state.x,
            infeasibility,
            iterations,
        });
    }
    let (x, res, eig) = finish_point(problem, out.state.x, opts);
    let feasible = res <= opts.eq_tol && eig >= -opts.psd_tol;
    let optimal = feasible && out.measures.gap <= opts.gap_tol && out.measures.dinf <= opts.gap_tol;
    let (status, x, res, eig) = if optimal {
        (SdpStatus::Optimal, x, res, eig)
    } else if feasible {
        (SdpStatus::Feasible, x, res, eig)
    } else {
        // fall back to the phase-1 point, which is feasible
        let r1 = problem.primal_residual(&x1);
        let e1 = min_eigenvalue_blocks(&x1);
        (SdpStatus::Feasible, x1, r1, e1)
    };
    Ok(SdpSolution {
        status,
        objective_value: problem.objective_value(&x),
        dual_objective: out.measures.dobj,
        primal_residual: res,
        min_eigenvalue: eig,
        block_values: x,
        infeasibility,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_constrained_scalar() {
        let mut p = SdpProblem::new(vec![1]);
        p.add_constraint(vec![SymEntry::new(0, 0, 0, 1.0)], 1.0);
        p.objective = vec![SymEntry::new(0, 0, 0, 1.0)];
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-8);
        assert!((s.block_values[0][(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn psd_forces_infeasibility() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(vec![SymEntry::new(0, 0, 0, 1.0)], 1.0);
        p.add_constraint(vec![SymEntry::new(0, 1, 1, 1.0)], 1.0);
        p.add_constraint(vec![SymEntry::new(0, 0, 1, 0.5)], 2.0);
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::InfeasibleDetected);
        assert!(s.infeasibility > 0.5);
    }

    #[test]
    fn boundary_optimum() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(vec![SymEntry::new(0, 0, 0, 1.0)], 1.0);
        p.add_constraint(vec![SymEntry::new(0, 0, 1, 0.5)], 1.0);
        p.objective = vec![SymEntry::new(0, 1, 1, 1.0)];
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-6, "{}", s.objective_value);
        let q = &s.block_values[0];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((q[(i, j)] - 1.0).abs() < 1e-4);
        }
        assert!(s.primal_residual <= 1e-8);
        assert!(s.min_eigenvalue >= -1e-8);
    }

    #[test]
    fn capacity_and_validation() {
        let p = SdpProblem::new(vec![500]);
        assert!(matches!(
            solve(&p, &SdpOptions::default()),
            Err(Error::Capacity(_))
        ));
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(vec![SymEntry::new(0, 2, 0, 1.0)], 1.0);
        assert!(matches!(solve(&p, &SdpOptions::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn empty_row_with_nonzero_rhs_is_infeasible() {
        let mut p = SdpProblem::new(vec![1]);
        p.add_constraint(vec![], 1.0);
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::InfeasibleDetected);
    }

    #[test]
    fn unbounded_objective() {
        // minimize -X11 with no constraints
        let mut p = SdpProblem::new(vec![1]);
        p.add_constraint(vec![SymEntry::new(0, 0, 0, 0.0)], 0.0);
        p.objective = vec![SymEntry::new(0, 0, 0, -1.0)];
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
    }

    #[test]
    fn debug_text_lists_everything() {
        let mut p = SdpProblem::new(vec![2, 1]);
        p.add_constraint(vec![SymEntry::new(0, 0, 1, 0.5), SymEntry::new(1, 0, 0, 1.0)], 3.0);
        p.objective = vec![SymEntry::new(1, 0, 0, 2.0)];
        let t = p.to_debug_text();
        assert_eq!(
            t,
            "blocks 2\nsizes 2 1\nconstraints 1\nrhs 0 3.0\n0 0 0 1 0.5\n0 1 0 0 1.0\nobjective 1\n1 0 0 2.0\n"
        );
    }
}
